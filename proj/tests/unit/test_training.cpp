#include <doctest.h>

#include <cmath>

#include "upsr/analysis.hpp"
#include "upsr/degradation.hpp"
#include "upsr/synth.hpp"
#include "upsr/training.hpp"

using namespace upsr;

namespace {

std::vector<TrainPair> tiny_dataset(int count, int size, uint64_t seed) {
    Rng rng(seed);
    DegradationConfig cfg;
    cfg.scale = 2;
    cfg.blur_lo = 0.5;
    cfg.blur_hi = 1.5;
    cfg.noise_lo = 0.0;
    cfg.noise_hi = 0.02;
    cfg.jpeg_enabled = false;
    std::vector<TrainPair> data;
    for (int i = 0; i < count; ++i) {
        TrainPair p;
        p.x0 = synth_patch(size, size, 3, rng);
        p.y0 = degrade_pair(p.x0, cfg, rng).y0;
        data.push_back(std::move(p));
    }
    return data;
}

bool models_identical(const TinyNetModel& a, const TinyNetModel& b) {
    if (a.t_table != b.t_table || a.layers.size() != b.layers.size()) return false;
    for (size_t l = 0; l < a.layers.size(); ++l)
        if (a.layers[l].w != b.layers[l].w || a.layers[l].b != b.layers[l].b) return false;
    return true;
}

}  // namespace

TEST_CASE("training is bit-deterministic given seed, dataset and config") {
    const std::vector<TrainPair> data = tiny_dataset(3, 16, 101);
    SmoothingPredictor predictor(2);
    const NoiseSchedule s = default_schedule();
    TrainConfig cfg;
    cfg.iterations = 30;
    cfg.batch_size = 2;
    cfg.patch = 16;
    cfg.hidden = 8;
    cfg.n_layers = 3;

    Rng r1 = Rng(7).stream("train");
    Rng r2 = Rng(7).stream("train");
    const TinyNetModel a = train_denoiser(data, predictor, s, cfg, r1);
    const TinyNetModel b = train_denoiser(data, predictor, s, cfg, r2);
    CHECK(models_identical(a, b));

    Rng r3 = Rng(8).stream("train");
    const TinyNetModel c = train_denoiser(data, predictor, s, cfg, r3);
    CHECK_FALSE(models_identical(a, c));
}

TEST_CASE("single-pair training reduces the loss (memorization)") {
    const std::vector<TrainPair> data = tiny_dataset(1, 32, 102);
    SmoothingPredictor predictor(2);
    const NoiseSchedule s = default_schedule();
    TrainConfig cfg;
    cfg.iterations = 500;
    cfg.batch_size = 1;
    cfg.lr = 0.25;
    cfg.lambda = 0.0;
    cfg.patch = 32;

    std::vector<TrainLogRow> log;
    Rng rng = Rng(9).stream("train");
    train_denoiser(data, predictor, s, cfg, rng, &log);
    REQUIRE(log.size() == 500);
    double tail = 0.0;
    for (int i = 0; i < 25; ++i) tail += log[log.size() - 1 - static_cast<size_t>(i)].loss;
    tail /= 25.0;
    CHECK(tail < log.front().loss);
    for (const auto& row : log) CHECK(std::isfinite(row.loss));
}

TEST_CASE("training rejects bad inputs and diverges loudly") {
    SmoothingPredictor predictor(2);
    const NoiseSchedule s = default_schedule();
    TrainConfig cfg;
    Rng rng(10);
    CHECK_THROWS_AS(train_denoiser({}, predictor, s, cfg, rng), ParamError);

    TrainConfig bad = cfg;
    bad.patch = 15;  // not divisible by r = 2
    const std::vector<TrainPair> data = tiny_dataset(1, 16, 103);
    CHECK_THROWS_AS(train_denoiser(data, predictor, s, bad, rng), ParamError);

    TrainConfig diverge = cfg;
    diverge.iterations = 400;
    diverge.batch_size = 1;
    diverge.patch = 16;
    diverge.hidden = 8;
    diverge.lr = 500.0;
    Rng rng2 = Rng(11).stream("train");
    CHECK_THROWS_WITH_AS(train_denoiser(data, predictor, s, diverge, rng2),
                         doctest::Contains("diverged"), Error);
}

TEST_CASE("trained predictor does not lose to the bicubic baseline on its own pair") {
    const std::vector<TrainPair> data = tiny_dataset(1, 32, 104);
    TrainConfig cfg;
    cfg.iterations = 400;
    cfg.batch_size = 2;
    cfg.lr = 0.1;
    cfg.patch = 32;
    cfg.hidden = 8;
    cfg.n_layers = 3;

    std::vector<TrainLogRow> log;
    Rng rng = Rng(12).stream("train");
    const TinyNetModel model = train_predictor(data, cfg, rng, &log);
    CHECK(model.role == ModelRole::predictor);
    LearnedPredictor pred(model);
    const double base = psnr(data[0].y0, data[0].x0);
    const double ours = psnr(pred.predict(data[0].y0), data[0].x0);
    CHECK(ours >= base);
    CHECK(log.back().loss < log.front().loss);
}

TEST_CASE("training log carries one row per iteration with the loss split") {
    const std::vector<TrainPair> data = tiny_dataset(1, 16, 105);
    SmoothingPredictor predictor(2);
    const NoiseSchedule s = default_schedule();
    TrainConfig cfg;
    cfg.iterations = 20;
    cfg.batch_size = 1;
    cfg.patch = 16;
    cfg.hidden = 8;
    cfg.n_layers = 3;
    cfg.lambda = 0.5;
    std::vector<TrainLogRow> log;
    Rng rng = Rng(13).stream("train");
    train_denoiser(data, predictor, s, cfg, rng, &log);
    REQUIRE(log.size() == 20);
    for (size_t i = 0; i < log.size(); ++i) {
        CHECK(log[i].iteration == static_cast<int>(i) + 1);
        CHECK(std::abs(log[i].loss - (log[i].mse + 0.5 * log[i].perceptual)) < 1e-9);
    }
}
