#include "upsr/training.hpp"

#include <cmath>

namespace upsr {

void TrainConfig::validate() const {
    if (iterations < 1 || batch_size < 1) throw ParamError("train: iterations and batch size must be >= 1");
    if (!(lr > 0.0)) throw ParamError("train: learning rate must be > 0");
    if (lambda < 0.0) throw ParamError("train: lambda must be >= 0");
    if (patch < 1 || r < 1 || hidden < 1 || n_layers < 2) throw ParamError("train: bad net geometry");
    if (patch % r != 0) throw ParamError("train: patch size must be divisible by r");
}

namespace {

struct Crop {
    int oy = 0, ox = 0, h = 0, w = 0;
};

Crop draw_crop(const Image& img, int patch, Rng& rng) {
    Crop c;
    c.h = std::min(patch, img.height);
    c.w = std::min(patch, img.width);
    c.oy = img.height > c.h ? rng.uniform_int(0, img.height - c.h) : 0;
    c.ox = img.width > c.w ? rng.uniform_int(0, img.width - c.w) : 0;
    return c;
}

Image crop_image(const Image& img, const Crop& c) {
    Image out(c.h, c.w, img.channels);
    for (int y = 0; y < c.h; ++y)
        for (int x = 0; x < c.w; ++x)
            for (int ch = 0; ch < img.channels; ++ch) out.at(y, x, ch) = img.at(c.oy + y, c.ox + x, ch);
    return out;
}

WeightMap crop_weights(const WeightMap& w, const Crop& c) {
    WeightMap out;
    out.height = c.h;
    out.width = c.w;
    out.b_u = w.b_u;
    out.psi_max = w.psi_max;
    out.values.resize(static_cast<size_t>(c.h) * c.w);
    for (int y = 0; y < c.h; ++y)
        for (int x = 0; x < c.w; ++x)
            out.values[static_cast<size_t>(y) * c.w + x] = w.at(c.oy + y, c.ox + x);
    return out;
}

int check_dataset(const std::vector<TrainPair>& dataset, const TrainConfig& cfg) {
    if (dataset.empty()) throw ParamError("train: empty dataset");
    const int C = dataset.front().x0.channels;
    for (const auto& p : dataset) {
        require_same_shape(p.x0, p.y0, "train pair");
        if (p.x0.channels != C) throw ShapeError("train: mixed channel counts in dataset");
        if (std::min(p.x0.height, cfg.patch) % cfg.r != 0 || std::min(p.x0.width, cfg.patch) % cfg.r != 0)
            throw ShapeError("train: effective patch dims must be divisible by r");
    }
    return C;
}

void append_log(std::vector<TrainLogRow>* log, int iter, double loss, double mse, double per) {
    if (log) log->push_back({iter, loss, mse, per});
}

[[noreturn]] void diverged(int iter, double last_finite) {
    throw Error("training diverged (non-finite loss) at iteration " + std::to_string(iter) +
                "; last finite loss " + std::to_string(last_finite));
}

}  // namespace

TinyNetModel train_denoiser(const std::vector<TrainPair>& dataset, const SRPredictor& predictor,
                            const NoiseSchedule& s, const TrainConfig& cfg, Rng& rng,
                            std::vector<TrainLogRow>* log) {
    cfg.validate();
    const int C = check_dataset(dataset, cfg);

    TinyNetModel model = make_tinynet(C, s.steps(), ModelRole::denoiser, cfg.hidden, cfg.n_layers, cfg.r);
    Rng init_rng = rng.stream("init");
    randomize_params(model, init_rng);

    // g(y0) and the weight map depend only on the pair; cache per index.
    std::vector<Image> g_cache(dataset.size());
    std::vector<WeightMap> w_cache(dataset.size());
    std::vector<bool> cached(dataset.size(), false);

    double last_finite = 0.0;
    for (int iter = 1; iter <= cfg.iterations; ++iter) {
        NetGrads<float> grads = zero_grads(model);
        double loss_acc = 0.0, mse_acc = 0.0, per_acc = 0.0;
        for (int b = 0; b < cfg.batch_size; ++b) {
            const int idx = rng.uniform_int(0, static_cast<int>(dataset.size()) - 1);
            const int t = rng.uniform_int(1, s.steps());
            const TrainPair& pair = dataset[static_cast<size_t>(idx)];
            if (!cached[static_cast<size_t>(idx)]) {
                g_cache[static_cast<size_t>(idx)] = predictor.predict(pair.y0);
                UncertaintyMap psi = box_smooth(
                    estimate_uncertainty(pair.y0, g_cache[static_cast<size_t>(idx)]), cfg.smooth_radius);
                w_cache[static_cast<size_t>(idx)] = build_weight_map(psi, cfg.b_u, cfg.psi_max);
                cached[static_cast<size_t>(idx)] = true;
            }
            const Crop cr = draw_crop(pair.x0, cfg.patch, rng);
            const Image x0 = crop_image(pair.x0, cr);
            const Image y0 = crop_image(pair.y0, cr);
            const Image g = crop_image(g_cache[static_cast<size_t>(idx)], cr);
            const WeightMap w = crop_weights(w_cache[static_cast<size_t>(idx)], cr);

            const Image x_t = sample_marginal(x0, y0, s, w, t, rng);
            ForwardTrace<float> tr =
                net_forward_trace(model, to_tensor(x_t), to_tensor(y0), to_tensor(g), t);
            LossResult<float> loss = mixed_loss_t(tr.out, to_tensor(x0), cfg.lambda);
            if (!std::isfinite(loss.total)) diverged(iter, last_finite);
            net_backward(model, tr, loss.grad, grads);
            loss_acc += loss.total;
            mse_acc += loss.mse;
            per_acc += loss.perceptual;
        }
        sgd_step(model, grads, static_cast<float>(cfg.lr / cfg.batch_size));
        last_finite = loss_acc / cfg.batch_size;
        append_log(log, iter, last_finite, mse_acc / cfg.batch_size, per_acc / cfg.batch_size);
    }
    return model;
}

TinyNetModel train_predictor(const std::vector<TrainPair>& dataset, const TrainConfig& cfg, Rng& rng,
                             std::vector<TrainLogRow>* log) {
    cfg.validate();
    const int C = check_dataset(dataset, cfg);

    // the timestep table is unused in predictor mode; steps = 1 keeps it tiny
    TinyNetModel model = make_tinynet(C, 1, ModelRole::predictor, cfg.hidden, cfg.n_layers, cfg.r);
    Rng init_rng = rng.stream("init");
    randomize_params(model, init_rng);

    double last_finite = 0.0;
    for (int iter = 1; iter <= cfg.iterations; ++iter) {
        NetGrads<float> grads = zero_grads(model);
        double loss_acc = 0.0;
        for (int b = 0; b < cfg.batch_size; ++b) {
            const int idx = rng.uniform_int(0, static_cast<int>(dataset.size()) - 1);
            const TrainPair& pair = dataset[static_cast<size_t>(idx)];
            const Crop cr = draw_crop(pair.x0, cfg.patch, rng);
            const Image x0 = crop_image(pair.x0, cr);
            const Image y0 = crop_image(pair.y0, cr);

            const Tensor<float> y0t = to_tensor(y0);
            ForwardTrace<float> tr = net_forward_trace(model, y0t, y0t, y0t, 1);
            LossResult<float> loss = l1_loss_t(tr.out, to_tensor(x0));
            if (!std::isfinite(loss.total)) diverged(iter, last_finite);
            net_backward(model, tr, loss.grad, grads);
            loss_acc += loss.total;
        }
        sgd_step(model, grads, static_cast<float>(cfg.lr / cfg.batch_size));
        last_finite = loss_acc / cfg.batch_size;
        append_log(log, iter, last_finite, last_finite, 0.0);
    }
    return model;
}

}  // namespace upsr
