#include <doctest.h>

#include <zlib.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "upsr/denoiser.hpp"
#include "upsr/predictor.hpp"
#include "upsr/synth.hpp"
#include "upsr/tinynet.hpp"

using namespace upsr;

#define CHECK_NEAR(a, b, tol) CHECK(std::abs((a) - (b)) <= (tol))

namespace {

std::filesystem::path temp_file(const char* name) {
    const auto dir = std::filesystem::temp_directory_path() / "upsr_unit";
    std::filesystem::create_directories(dir);
    return dir / name;
}

std::vector<char> slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void spit(const std::filesystem::path& p, const std::vector<char>& bytes) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("zero-initialized net is the identity on x_t") {
    const TinyNetModel m = make_tinynet(3, 5, ModelRole::denoiser, 8, 4, 2);
    Rng rng(81);
    const Image x_t = random_image(16, 16, 3, rng);
    const Image y0 = random_image(16, 16, 3, rng);
    const Image g = random_image(16, 16, 3, rng);
    const Image out = tinynet_forward(m, x_t, y0, g, 3);
    CHECK(out.data == x_t.data);
}

TEST_CASE("net forward is deterministic and fully convolutional") {
    Rng rng(82);
    TinyNetModel m = make_tinynet(1, 4, ModelRole::denoiser, 8, 3, 2);
    randomize_params(m, rng);
    // nonzero final layer so the delta path actually fires
    for (auto& v : m.layers.back().w) v = static_cast<float>(0.1 * rng.normal());

    const Image x_t = random_image(16, 16, 1, rng);
    const Image y0 = random_image(16, 16, 1, rng);
    const Image g = random_image(16, 16, 1, rng);
    const Image o1 = tinynet_forward(m, x_t, y0, g, 2);
    const Image o2 = tinynet_forward(m, x_t, y0, g, 2);
    CHECK(o1.data == o2.data);

    for (const int n : {8, 16, 32, 48}) {
        const Image big_x = random_image(n, 2 * n, 1, rng);
        const Image out = tinynet_forward(m, big_x, big_x, big_x, 1);
        CHECK(out.height == n);
        CHECK(out.width == 2 * n);
        CHECK(out.channels == 1);
    }
}

TEST_CASE("timestep table changes the output per t") {
    Rng rng(83);
    TinyNetModel m = make_tinynet(1, 3, ModelRole::denoiser, 8, 3, 2);
    randomize_params(m, rng);
    for (auto& v : m.layers.back().w) v = static_cast<float>(0.1 * rng.normal());
    for (auto& v : m.t_table) v = static_cast<float>(0.3 * rng.normal());

    const Image x = random_image(8, 8, 1, rng);
    const Image a = tinynet_forward(m, x, x, x, 1);
    const Image b = tinynet_forward(m, x, x, x, 3);
    CHECK(a.data != b.data);
}

TEST_CASE("net input contract violations throw") {
    const TinyNetModel m = make_tinynet(3, 5, ModelRole::denoiser, 8, 3, 2);
    Rng rng(84);
    const Image ok = random_image(8, 8, 3, rng);
    const Image gray = random_image(8, 8, 1, rng);
    const Image odd = random_image(7, 8, 3, rng);
    CHECK_THROWS_AS(tinynet_forward(m, gray, gray, gray, 1), ShapeError);
    CHECK_THROWS_AS(tinynet_forward(m, odd, odd, odd, 1), ShapeError);
    CHECK_THROWS_AS(tinynet_forward(m, ok, ok, ok, 0), ParamError);
    CHECK_THROWS_AS(tinynet_forward(m, ok, ok, ok, 6), ParamError);
    CHECK_THROWS_AS(tinynet_forward(m, ok, gray, ok, 1), ShapeError);
}

TEST_CASE("TinyNetDenoiser pads non-divisible inputs") {
    Rng rng(85);
    TinyNetModel m = make_tinynet(1, 3, ModelRole::denoiser, 8, 3, 2);
    randomize_params(m, rng);
    TinyNetDenoiser den(std::move(m));
    const Image x = random_image(9, 13, 1, rng);
    const Image out = den.denoise(x, x, x, 2);
    CHECK(out.height == 9);
    CHECK(out.width == 13);
}

TEST_CASE("oracle denoiser returns x0 plus controlled error") {
    Rng rng(86);
    const Image x0 = random_image(64, 64, 1, rng);
    OracleDenoiser perfect(x0, 0.0, rng.stream("o1"));
    CHECK(perfect.denoise(x0, x0, x0, 1).data == x0.data);
    CHECK(perfect.denoise(x0, x0, x0, 2).data == x0.data);

    OracleDenoiser noisy(x0, 0.1, rng.stream("o2"));
    double m2 = 0.0;
    long n = 0;
    for (int rep = 0; rep < 30; ++rep) {
        const Image out = noisy.denoise(x0, x0, x0, 1);
        for (size_t i = 0; i < out.data.size(); ++i) {
            const double d = static_cast<double>(out.data[i]) - x0.data[i];
            m2 += d * d;
            ++n;
        }
    }
    CHECK_NEAR(std::sqrt(m2 / static_cast<double>(n)), 0.1, 0.1 * 0.02);
}

TEST_CASE("mixed_loss anchors") {
    Rng rng(87);
    const Image x0 = random_image(8, 8, 3, rng);
    const MixedLoss zero = mixed_loss(x0, x0, 1.0);
    CHECK(zero.total == 0.0);
    for (float v : zero.grad.data) CHECK(v == 0.0f);

    Image off = x0;
    for (auto& v : off.data) v += 0.1f;
    const MixedLoss pure = mixed_loss(off, x0, 0.0);
    CHECK_NEAR(pure.total, 0.01, 1e-6);
    CHECK_NEAR(pure.mse, 0.01, 1e-6);
    CHECK(pure.perceptual == 0.0);
    // constant offsets leave Sobel magnitudes unchanged
    const MixedLoss mixed = mixed_loss(off, x0, 1.0);
    CHECK_NEAR(mixed.perceptual, 0.0, 1e-6);

    Image wrong(4, 4, 3);
    CHECK_THROWS_AS(mixed_loss(off, wrong, 1.0), ShapeError);
}

TEST_CASE("mixed_loss gradient matches finite differences away from kinks") {
    Rng rng(88);
    Tensor<double> pred(8, 8, 1), target(8, 8, 1);
    for (auto& v : pred.v) v = rng.uniform();
    for (auto& v : target.v) v = rng.uniform();

    // lambda = 0: pure MSE, exact everywhere
    const LossResult<double> base0 = mixed_loss_t(pred, target, 0.0);
    for (int k = 0; k < 10; ++k) {
        const size_t j = static_cast<size_t>(rng.uniform_int(0, 63));
        Tensor<double> pp = pred, pm = pred;
        pp.v[j] += 1e-4;
        pm.v[j] -= 1e-4;
        const double fd =
            (mixed_loss_t(pp, target, 0.0).total - mixed_loss_t(pm, target, 0.0).total) / 2e-4;
        CHECK_NEAR(base0.grad.v[j], fd, 1e-7 + 1e-4 * std::abs(fd));
    }

    // lambda = 1: skip coordinates near the |.| kink or the magnitude cone
    Tensor<double> mp, gxp, gyp, mt, gxt, gyt;
    detail::sobel_magnitude(pred, mp, gxp, gyp);
    detail::sobel_magnitude(target, mt, gxt, gyt);
    const LossResult<double> base1 = mixed_loss_t(pred, target, 1.0);
    int compared = 0;
    for (int k = 0; k < 40; ++k) {
        const size_t j = static_cast<size_t>(rng.uniform_int(0, 63));
        const int y = static_cast<int>(j / 8), x = static_cast<int>(j % 8);
        bool invalid = false;
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                const int yy = std::clamp(y + dy, 0, 7), xx = std::clamp(x + dx, 0, 7);
                if (std::abs(mp.at(yy, xx, 0) - mt.at(yy, xx, 0)) < 0.05) invalid = true;
                if (mp.at(yy, xx, 0) < 0.25) invalid = true;
            }
        if (invalid) continue;
        Tensor<double> pp = pred, pm = pred;
        pp.v[j] += 1e-4;
        pm.v[j] -= 1e-4;
        const double fd =
            (mixed_loss_t(pp, target, 1.0).total - mixed_loss_t(pm, target, 1.0).total) / 2e-4;
        CHECK(std::abs(base1.grad.v[j] - fd) / std::max({std::abs(fd), std::abs(base1.grad.v[j]), 1e-6}) <
              1e-4);
        ++compared;
    }
    CHECK(compared > 5);
}

TEST_CASE("l1 loss value and gradient") {
    Tensor<double> a(2, 2, 1), b(2, 2, 1);
    a.v = {0.2, 0.4, 0.6, 0.8};
    b.v = {0.3, 0.4, 0.4, 0.9};
    const LossResult<double> r = l1_loss_t(a, b);
    CHECK_NEAR(r.total, (0.1 + 0.0 + 0.2 + 0.1) / 4.0, 1e-12);
    CHECK(r.grad.v[0] == -0.25);
    CHECK(r.grad.v[2] == 0.25);
}

TEST_CASE("conv backward matches finite differences (linear map, exact)") {
    Rng rng(89);
    ConvLayer<double> l;
    l.in_ch = 2;
    l.out_ch = 3;
    l.k = 3;
    l.w.resize(2 * 3 * 9);
    l.b.resize(3);
    for (auto& v : l.w) v = 0.3 * rng.normal();
    for (auto& v : l.b) v = 0.1 * rng.normal();
    Tensor<double> in(8, 8, 2);
    for (auto& v : in.v) v = rng.normal();
    Tensor<double> g(8, 8, 3);
    for (auto& v : g.v) v = rng.normal();

    auto loss = [&](const ConvLayer<double>& layer, const Tensor<double>& input) {
        const Tensor<double> out = conv_forward(layer, input);
        double acc = 0.0;
        for (size_t i = 0; i < out.size(); ++i) acc += g.v[i] * out.v[i];
        return acc;
    };
    Tensor<double> d_in;
    ConvLayer<double> d_l = l;
    std::fill(d_l.w.begin(), d_l.w.end(), 0.0);
    std::fill(d_l.b.begin(), d_l.b.end(), 0.0);
    conv_backward(l, in, g, d_in, d_l);

    const double h = 1e-3;
    for (int k = 0; k < 20; ++k) {
        const size_t j = static_cast<size_t>(rng.uniform_int(0, static_cast<int>(l.w.size()) - 1));
        ConvLayer<double> lp = l, lm = l;
        lp.w[j] += h;
        lm.w[j] -= h;
        CHECK_NEAR(d_l.w[j], (loss(lp, in) - loss(lm, in)) / (2 * h),
                   1e-4 * std::max(1.0, std::abs(d_l.w[j])));
    }
    for (int k = 0; k < 10; ++k) {
        const size_t j = static_cast<size_t>(rng.uniform_int(0, static_cast<int>(in.v.size()) - 1));
        Tensor<double> ip = in, im = in;
        ip.v[j] += h;
        im.v[j] -= h;
        CHECK_NEAR(d_in.v[j], (loss(l, ip) - loss(l, im)) / (2 * h),
                   1e-4 * std::max(1.0, std::abs(d_in.v[j])));
    }
}

TEST_CASE("model container round-trips bit-exactly") {
    Rng rng(90);
    TinyNetModel m = make_tinynet(3, 5, ModelRole::predictor, 8, 3, 2);
    randomize_params(m, rng);
    for (auto& v : m.t_table) v = static_cast<float>(rng.normal());

    const auto path = temp_file("roundtrip.upsr");
    save_model(m, path.string());
    const TinyNetModel r = load_model(path.string());
    CHECK(r.role == ModelRole::predictor);
    CHECK(r.channels == m.channels);
    CHECK(r.r == m.r);
    CHECK(r.hidden == m.hidden);
    CHECK(r.steps == m.steps);
    CHECK(r.t_table == m.t_table);
    REQUIRE(r.layers.size() == m.layers.size());
    for (size_t l = 0; l < m.layers.size(); ++l) {
        CHECK(r.layers[l].w == m.layers[l].w);
        CHECK(r.layers[l].b == m.layers[l].b);
    }
}

TEST_CASE("model container rejects corruption with distinct errors") {
    Rng rng(91);
    TinyNetModel m = make_tinynet(1, 3, ModelRole::denoiser, 4, 2, 2);
    randomize_params(m, rng);
    const auto good = temp_file("good.upsr");
    save_model(m, good.string());
    std::vector<char> bytes = slurp(good);

    // wrong magic names the path
    auto bad_magic = bytes;
    bad_magic[0] = 'Z';
    const auto p1 = temp_file("magic.upsr");
    spit(p1, bad_magic);
    CHECK_THROWS_WITH_AS(load_model(p1.string()), doctest::Contains("magic.upsr"), BadMagicError);

    // flipped payload byte fails the checksum, not a crash
    auto flipped = bytes;
    flipped[flipped.size() / 2] ^= 0x40;
    const auto p2 = temp_file("flip.upsr");
    spit(p2, flipped);
    CHECK_THROWS_AS(load_model(p2.string()), ChecksumError);

    // truncation also reads as a checksum failure
    auto truncated = bytes;
    truncated.resize(truncated.size() / 3);
    const auto p3 = temp_file("trunc.upsr");
    spit(p3, truncated);
    CHECK_THROWS_AS(load_model(p3.string()), ChecksumError);

    // unsupported format version (patch the field, fix the checksum)
    auto versioned = bytes;
    versioned[4] = 99;
    const uint32_t crc = static_cast<uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(versioned.data()),
              static_cast<uInt>(versioned.size() - 4)));
    for (int i = 0; i < 4; ++i)
        versioned[versioned.size() - 4 + static_cast<size_t>(i)] =
            static_cast<char>((crc >> (8 * i)) & 0xff);
    const auto p4 = temp_file("version.upsr");
    spit(p4, versioned);
    CHECK_THROWS_AS(load_model(p4.string()), VersionError);

    CHECK_THROWS_AS(load_model("/nonexistent/path/model.upsr"), IoError);
}

TEST_CASE("learned predictor preserves shape and validates its role tag") {
    Rng rng(92);
    TinyNetModel m = make_tinynet(3, 1, ModelRole::predictor, 4, 2, 2);
    randomize_params(m, rng);
    LearnedPredictor pred(m);
    const Image y0 = random_image(9, 11, 3, rng);  // forces padding
    const Image out = pred.predict(y0);
    CHECK(out.height == 9);
    CHECK(out.width == 11);
    CHECK(out.channels == 3);

    TinyNetModel wrong_role = make_tinynet(3, 1, ModelRole::denoiser, 4, 2, 2);
    CHECK_THROWS_AS(LearnedPredictor{wrong_role}, ModelFormatError);

    TinyNetModel denoiser_role = make_tinynet(3, 1, ModelRole::predictor, 4, 2, 2);
    CHECK_THROWS_AS(TinyNetDenoiser{denoiser_role}, ModelFormatError);
}

TEST_CASE("smoothing predictor leaves constants fixed and flags edges") {
    IdentityPredictor ident;
    Rng rng(93);
    const Image img = random_image(12, 12, 3, rng);
    CHECK(ident.predict(img).data == img.data);

    SmoothingPredictor smooth(2);
    const Image flat = Image::constant(16, 16, 1, 0.6f);
    const Image pf = smooth.predict(flat);
    for (size_t i = 0; i < flat.data.size(); ++i) CHECK_NEAR(pf.data[i], flat.data[i], 1e-6);

    // step edge: residual peaks at the edge, vanishes far away
    Image edge(16, 16, 1);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) edge.at(y, x, 0) = x < 8 ? 0.0f : 1.0f;
    const Image pe = smooth.predict(edge);
    const double at_edge = std::abs(pe.at(8, 7, 0) - edge.at(8, 7, 0));
    const double far_away = std::abs(pe.at(8, 1, 0) - edge.at(8, 1, 0));
    CHECK(at_edge > 0.1);
    CHECK(far_away < 1e-4);

    CHECK_THROWS_AS(SmoothingPredictor{0}, ParamError);
}

TEST_CASE("widen mirrors the float model in double precision") {
    Rng rng(94);
    TinyNetModel m = make_tinynet(1, 2, ModelRole::denoiser, 4, 2, 2);
    randomize_params(m, rng);
    const NetT<double> d = widen(m);
    CHECK(d.layers.size() == m.layers.size());
    for (size_t l = 0; l < m.layers.size(); ++l)
        for (size_t i = 0; i < m.layers[l].w.size(); ++i)
            CHECK(d.layers[l].w[i] == static_cast<double>(m.layers[l].w[i]));
}
