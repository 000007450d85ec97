#include "upsr/verify.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "upsr/analysis.hpp"
#include "upsr/degradation.hpp"
#include "upsr/diffusion.hpp"
#include "upsr/image_io.hpp"
#include "upsr/resample.hpp"
#include "upsr/synth.hpp"
#include "upsr/training.hpp"

namespace upsr::verify {

using nlohmann::json;

namespace {

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double elapsed() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

struct Moments {
    double mean = 0.0;
    double stddev = 0.0;
    long n = 0;
};

class MomentAccumulator {
public:
    void add(double v) {
        ++n_;
        const double d = v - mean_;
        mean_ += d / static_cast<double>(n_);
        m2_ += d * (v - mean_);
    }
    Moments finish() const {
        Moments m;
        m.n = n_;
        m.mean = mean_;
        m.stddev = n_ > 1 ? std::sqrt(m2_ / static_cast<double>(n_ - 1)) : 0.0;
        return m;
    }

private:
    long n_ = 0;
    double mean_ = 0.0, m2_ = 0.0;
};

Moments image_moments(const Image& img) {
    MomentAccumulator acc;
    for (float v : img.data) acc.add(v);
    return acc.finish();
}

/// x' = mean + s * (x - mean): the hidden variance mutation hook.
void scale_about(Image& img, double mean, double s) {
    if (s == 1.0) return;
    for (auto& v : img.data) v = static_cast<float>(mean + s * (static_cast<double>(v) - mean));
}

bool rel_close(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b));
}

// ---------------------------------------------------------------------------

CheckResult check_schedule_telescoping(const Options& opt) {
    Timer timer;
    CheckResult res{"schedule.telescoping", true, false, 0.0, json::object()};
    Rng rng = Rng(opt.seed).stream("schedule.telescoping");
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        const int T = rng.uniform_int(1, 15);
        const double eta1 = rng.uniform_range(1e-4, 0.01);
        const double etaT = rng.uniform_range(0.5, 1.0);
        const double p = rng.uniform_range(0.1, 3.0);
        NoiseSchedule s = NoiseSchedule::build(T, 2.0, eta1, etaT, p);
        double sum = 0.0;
        for (int t = 1; t <= T; ++t) sum += s.alpha(t);
        worst = std::max(worst, std::abs(sum - s.eta(T)));
        if (s.eta(0) != 0.0 || (T > 1 && s.eta(1) != eta1) || s.eta(T) != etaT) res.pass = false;
    }
    res.pass = res.pass && worst <= 1e-12;
    res.detail = {{"max_telescoping_error", worst}, {"tolerance", 1e-12}};
    res.seconds = timer.elapsed();
    return res;
}

CheckResult check_schedule_monotonic(const Options& opt) {
    Timer timer;
    CheckResult res{"schedule.monotonic", true, false, 0.0, json::object()};
    Rng rng = Rng(opt.seed).stream("schedule.monotonic");
    for (int i = 0; i < 50 && res.pass; ++i) {
        const int T = rng.uniform_int(1, 15);
        NoiseSchedule s = NoiseSchedule::build(T, rng.uniform_range(0.5, 3.0),
                                               rng.uniform_range(1e-4, 0.01),
                                               rng.uniform_range(0.5, 1.0), rng.uniform_range(0.1, 3.0));
        for (int t = 1; t <= T; ++t)
            if (!(s.eta(t) > s.eta(t - 1)) || !(s.alpha(t) > 0.0)) res.pass = false;
    }
    res.detail = {{"cases", 50}};
    res.seconds = timer.elapsed();
    return res;
}

CheckResult check_rng_determinism(const Options& opt) {
    Timer timer;
    CheckResult res{"rng.determinism", true, false, 0.0, json::object()};
    Rng a(opt.seed), b(opt.seed);
    for (int i = 0; i < 1000; ++i)
        if (a.normal() != b.normal()) res.pass = false;

    // parallel fill vs sequential draws, bit for bit
    Rng c = Rng(opt.seed).stream("fill");
    Rng d = Rng(opt.seed).stream("fill");
    std::vector<float> filled(4096);
    c.fill_normal(filled);
    for (size_t i = 0; i < filled.size(); ++i)
        if (filled[i] != static_cast<float>(d.normal())) res.pass = false;
    if (c.counter() != d.counter()) res.pass = false;

    // distinct purposes give distinct streams
    Rng e = Rng(opt.seed).stream("left");
    Rng f = Rng(opt.seed).stream("right");
    int same = 0;
    for (int i = 0; i < 64; ++i) same += e.next_u64() == f.next_u64();
    if (same != 0) res.pass = false;

    res.detail = {{"draws_compared", 1000}, {"fill_size", filled.size()}};
    res.seconds = timer.elapsed();
    return res;
}

CheckResult check_weighting_anchors(const Options& opt) {
    Timer timer;
    CheckResult res{"weighting.anchors", true, false, 0.0, json::object()};
    const double tol = 1e-9;
    const double bu = 0.4, pm = 0.05;
    json cases = json::array();
    auto expect = [&](double psi, double want) {
        const double got = weight_coefficient(psi, bu, pm);
        const bool ok = std::abs(got - want) <= tol;
        cases.push_back({{"psi", psi}, {"target", want}, {"value", got}, {"pass", ok}});
        res.pass = res.pass && ok;
    };
    expect(0.0, 0.4);
    expect(0.05, 1.0);
    expect(0.025, 0.7);
    expect(0.9, 1.0);
    expect(5.0, 1.0);

    Rng rng = Rng(opt.seed).stream("weighting.anchors");
    bool monotone = true;
    bool in_range = true;
    for (int i = 0; i < 10000; ++i) {
        double a = rng.uniform_range(0.0, 0.2);
        double b = rng.uniform_range(0.0, 0.2);
        if (a > b) std::swap(a, b);
        const double wa = weight_coefficient(a, bu, pm);
        const double wb = weight_coefficient(b, bu, pm);
        monotone = monotone && wa <= wb;
        in_range = in_range && wa >= bu - tol && wb <= 1.0 + tol;
    }
    res.pass = res.pass && monotone && in_range;
    res.detail = {{"anchors", cases}, {"monotone_pairs", 10000}, {"monotone", monotone},
                  {"range_ok", in_range}};
    res.seconds = timer.elapsed();
    return res;
}

CheckResult check_marginal_moments(const Options& opt) {
    Timer timer;
    CheckResult res{"marginal.moments", true, false, 0.0, json::object()};
    Rng rng = Rng(opt.seed).stream("marginal.moments");
    const long n = 1000 * 1000;
    json cases = json::array();
    for (int i = 0; i < 20; ++i) {
        const double x0 = rng.uniform_range(0.0, 1.0);
        const double y0 = rng.uniform_range(0.0, 1.0);
        const double eta = rng.uniform_range(0.05, 1.0);
        const double kappa = rng.uniform_range(0.5, 3.0);
        const double w = rng.uniform_range(0.2, 1.0);
        NoiseSchedule s = NoiseSchedule::from_etas(kappa, {eta});
        const double target_mean = x0 + eta * (y0 - x0);
        const double target_std = kappa * w * std::sqrt(eta);

        const Image x0i = Image::constant(1000, 1000, 1, static_cast<float>(x0));
        const Image y0i = Image::constant(1000, 1000, 1, static_cast<float>(y0));
        const WeightMap wm = uniform_weight_map(1000, 1000, static_cast<float>(w));
        Rng draw_rng = rng.stream(static_cast<uint64_t>(i));

        // one batched draw streamed through the scalar-source interface
        Image batch;
        size_t idx = 0;
        auto sample = [&]() -> double {
            if (idx == 0) {
                batch = sample_marginal(x0i, y0i, s, wm, 1, draw_rng);
                scale_about(batch, target_mean, opt.variance_bug_scale);
            }
            return batch.data[idx++];
        };
        const MomentReport rep = mc_moment_check(sample, target_mean, target_std, n);
        cases.push_back({{"x0", x0},
                         {"y0", y0},
                         {"eta", eta},
                         {"kappa", kappa},
                         {"w", w},
                         {"target_mean", rep.target_mean},
                         {"target_std", rep.target_std},
                         {"emp_mean", rep.emp_mean},
                         {"emp_std", rep.emp_std},
                         {"pass", rep.pass()}});
        res.pass = res.pass && rep.pass();
    }
    res.detail = {{"n", n}, {"cases", cases}};
    res.seconds = timer.elapsed();
    return res;
}

CheckResult check_composition_variance(const Options& opt) {
    Timer timer;
    CheckResult res{"composition.variance", true, false, 0.0, json::object()};
    NoiseSchedule s = default_schedule();
    const int T = s.steps();
    const std::vector<int> targets = {1, (T + 1) / 2, T};
    Rng rng = Rng(opt.seed).stream("composition.variance");

    const double x0 = 0.2, y0 = 0.7, w = 0.6;
    const Image x0i = Image::constant(1000, 1000, 1, static_cast<float>(x0));
    const Image y0i = Image::constant(1000, 1000, 1, static_cast<float>(y0));
    const WeightMap wm = uniform_weight_map(1000, 1000, static_cast<float>(w));

    json cases = json::array();
    Image x = x0i;
    for (int t = 1; t <= T; ++t) {
        x = forward_step(x, x0i, y0i, s, wm, t, rng);
        if (std::find(targets.begin(), targets.end(), t) == targets.end()) continue;
        const double eta = s.eta(t);
        const double target_mean = x0 + eta * (y0 - x0);
        const double target_std = s.kappa() * w * std::sqrt(eta);
        Image probe = x;
        scale_about(probe, target_mean, opt.variance_bug_scale);
        const Moments m = image_moments(probe);
        const bool mean_ok =
            std::abs(m.mean - target_mean) < 4.0 * target_std / std::sqrt(static_cast<double>(m.n));
        const bool std_ok = rel_close(m.stddev, target_std, 0.01);
        cases.push_back({{"t", t},
                         {"target_mean", target_mean},
                         {"target_std", target_std},
                         {"emp_mean", m.mean},
                         {"emp_std", m.stddev},
                         {"pass", mean_ok && std_ok}});
        res.pass = res.pass && mean_ok && std_ok;
    }
    res.detail = {{"schedule_T", T}, {"w", w}, {"cases", cases}};
    res.seconds = timer.elapsed();
    return res;
}

CheckResult check_reverse_posterior_tv(const Options& opt) {
    Timer timer;
    CheckResult res{"reverse.posterior_tv", true, false, 0.0, json::object()};
    Rng rng = Rng(opt.seed).stream("reverse.posterior_tv");
    json cases = json::array();
    double worst_tv = 0.0;
    for (int i = 0; i < 20; ++i) {
        NoiseSchedule s = [&] {
            const double kappa = rng.uniform_range(0.5, 3.0);
            if (i % 4 != 3) {
                NoiseSchedule base = default_schedule();
                std::vector<double> etas(base.etas().begin() + 1, base.etas().end());
                return NoiseSchedule::from_etas(kappa, etas);
            }
            std::vector<double> etas(5);
            double acc = 0.0;
            for (auto& e : etas) acc = e = acc + rng.uniform_range(0.05, 0.3);
            const double scale = rng.uniform_range(0.6, 1.0) / etas.back();
            for (auto& e : etas) e *= scale;
            return NoiseSchedule::from_etas(kappa, etas);
        }();
        const int t = rng.uniform_int(2, s.steps());
        const double w = rng.uniform_range(0.2, 1.0);
        const double x0 = rng.uniform_range(0.0, 1.0);
        const double y0 = rng.uniform_range(0.0, 1.0);
        const double x_t = rng.uniform_range(-1.0, 2.0);

        const GridDensity grid = bayes_grid_posterior(x_t, x0, y0, s, w, t);
        const std::vector<double> closed =
            reverse_density_closed_form(grid.x, x_t, x0, s, w, t, opt.variance_bug_scale);
        const double tv = tv_distance(grid, closed);
        const double mass = trapezoid_mass(grid);
        const bool ok = tv < 1e-3 && std::abs(mass - 1.0) < 1e-6 && !grid.coarse;
        worst_tv = std::max(worst_tv, tv);
        cases.push_back({{"t", t}, {"w", w}, {"x_t", x_t}, {"tv", tv}, {"grid_mass", mass},
                         {"pass", ok}});
        res.pass = res.pass && ok;
    }
    res.detail = {{"cases", cases}, {"worst_tv", worst_tv}, {"tolerance", 1e-3}};
    res.seconds = timer.elapsed();
    return res;
}

CheckResult check_reverse_final_determinism(const Options& opt) {
    Timer timer;
    CheckResult res{"reverse.final_determinism", true, false, 0.0, json::object()};
    Rng rng = Rng(opt.seed).stream("reverse.final_determinism");
    const Image x0_hat = random_image(16, 16, 3, rng);
    NoiseSchedule s = default_schedule();
    const WeightMap wm = uniform_weight_map(16, 16, 0.7f);
    int identical = 0;
    for (int i = 0; i < 1000; ++i) {
        Image x_t = random_image(16, 16, 3, rng);
        const Image out = reverse_step(x_t, x0_hat, s, wm, 1, rng);
        identical += out.data == x0_hat.data;
    }
    res.pass = identical == 1000;
    res.detail = {{"draws", 1000}, {"bit_identical", identical}};
    res.seconds = timer.elapsed();
    return res;
}

CheckResult check_chain_oracle_recovery(const Options& opt) {
    Timer timer;
    CheckResult res{"chain.oracle_recovery", true, false, 0.0, json::object()};
    Rng rng = Rng(opt.seed).stream("chain.oracle_recovery");
    NoiseSchedule s = default_schedule();
    SmoothingPredictor predictor(2);
    json cases = json::array();
    double worst = 0.0;
    for (int i = 0; i < 10; ++i) {
        const Image x0 = random_image(32, 32, 3, rng);
        const Image y0 = gaussian_blur(x0, 1.2);
        OracleDenoiser oracle(x0, 0.0, rng.stream("oracle"));
        Rng chain_rng = rng.stream(static_cast<uint64_t>(i));
        const Image out = run_reverse_chain(y0, predictor, oracle, s, WeightingConfig{}, chain_rng);
        const double err = mse(out, x0);
        worst = std::max(worst, err);
        cases.push_back({{"mse", err}, {"psnr", psnr(out, x0)}});
        res.pass = res.pass && err < 1e-10;
    }
    res.detail = {{"cases", cases}, {"worst_mse", worst}, {"mse_tolerance", 1e-10}};
    res.seconds = timer.elapsed();
    return res;
}

CheckResult check_unw_differentiation(const Options& opt) {
    Timer timer;
    CheckResult res{"unw.noise_differentiation", true, false, 0.0, json::object()};
    Rng rng = Rng(opt.seed).stream("unw.noise_differentiation");
    const int H = 64, W = 128;
    const Image y0 = half_flat_half_texture(H, W, 3, rng);
    SmoothingPredictor predictor(2);
    const Image g = predictor.predict(y0);
    const UncertaintyMap psi = estimate_uncertainty(y0, g);
    const WeightMap wm = build_weight_map(psi, WeightingDefaults::b_u, WeightingDefaults::psi_max);
    NoiseSchedule s = default_schedule();

    // interior column bands, away from the flat/texture boundary
    const int flat_hi = W / 2 - 8, tex_lo = W / 2 + 8;
    MomentAccumulator flat, tex;
    for (int rep = 0; rep < 20; ++rep) {
        const Image xT = sample_initial_state(y0, s, wm, rng);
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x)
                for (int c = 0; c < 3; ++c) {
                    const double noise = static_cast<double>(xT.at(y, x, c)) - y0.at(y, x, c);
                    if (x < flat_hi)
                        flat.add(noise);
                    else if (x >= tex_lo)
                        tex.add(noise);
                }
    }
    const Moments mf = flat.finish();
    const Moments mt = tex.finish();
    const double target_flat = WeightingDefaults::b_u * s.sigma_max();
    const bool flat_ok = rel_close(mf.stddev, target_flat, 0.02);
    const double ratio = mt.stddev / target_flat;
    const bool tex_ok = ratio >= 1.5;
    res.pass = flat_ok && tex_ok;
    res.detail = {{"flat_target_std", target_flat},
                  {"flat_emp_std", mf.stddev},
                  {"textured_emp_std", mt.stddev},
                  {"textured_over_flat_target", ratio},
                  {"required_ratio", 1.5},
                  {"flat_samples", mf.n},
                  {"textured_samples", mt.n}};
    res.seconds = timer.elapsed();
    return res;
}

// --- gradient checks -------------------------------------------------------

struct FdStats {
    int compared = 0;
    int skipped = 0;
    double worst_rel = 0.0;
    bool pass = true;
};

double rel_err(double a, double f) {
    return std::abs(a - f) / std::max({std::abs(a), std::abs(f), 1e-6});
}

void fd_compare(FdStats& st, double analytic, double fd, double tol) {
    ++st.compared;
    const double e = rel_err(analytic, fd);
    st.worst_rel = std::max(st.worst_rel, e);
    if (e >= tol) st.pass = false;
}

void conv_layer_fd_trial(Rng& rng, FdStats& st, double h, double tol) {
    const int in_ch = rng.uniform_int(1, 4), out_ch = rng.uniform_int(1, 4);
    ConvLayer<double> l;
    l.in_ch = in_ch;
    l.out_ch = out_ch;
    l.k = 3;
    l.w.resize(static_cast<size_t>(in_ch) * out_ch * 9);
    l.b.resize(static_cast<size_t>(out_ch));
    for (auto& v : l.w) v = 0.4 * rng.normal();
    for (auto& v : l.b) v = 0.2 * rng.normal();
    Tensor<double> in(8, 8, in_ch);
    for (auto& v : in.v) v = 0.5 * rng.normal();
    Tensor<double> g(8, 8, out_ch);
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

    for (int trial = 0; trial < 12; ++trial) {
        const size_t j = static_cast<size_t>(rng.uniform_int(0, static_cast<int>(l.w.size()) - 1));
        ConvLayer<double> lp = l, lm = l;
        lp.w[j] += h;
        lm.w[j] -= h;
        fd_compare(st, d_l.w[j], (loss(lp, in) - loss(lm, in)) / (2 * h), tol);
    }
    for (size_t j = 0; j < l.b.size(); ++j) {
        ConvLayer<double> lp = l, lm = l;
        lp.b[j] += h;
        lm.b[j] -= h;
        fd_compare(st, d_l.b[j], (loss(lp, in) - loss(lm, in)) / (2 * h), tol);
    }
    for (int trial = 0; trial < 8; ++trial) {
        const size_t j = static_cast<size_t>(rng.uniform_int(0, static_cast<int>(in.v.size()) - 1));
        Tensor<double> ip = in, im = in;
        ip.v[j] += h;
        im.v[j] -= h;
        fd_compare(st, d_in.v[j], (loss(l, ip) - loss(l, im)) / (2 * h), tol);
    }
}

void mixed_loss_fd_trial(Rng& rng, FdStats& st, double tol, double lambda) {
    // Smaller step than the layer checks: the perceptual term's gradient-
    // magnitude surface is smooth but curved, and h = 1e-4 in double keeps
    // the truncation error two orders below the tolerance.
    const double h = 1e-4;
    Tensor<double> pred(8, 8, 3), target(8, 8, 3);
    for (auto& v : pred.v) v = rng.uniform();
    for (auto& v : target.v) v = rng.uniform();
    const LossResult<double> base = mixed_loss_t(pred, target, lambda);

    Tensor<double> mp, gxp, gyp, mt, gxt, gyt;
    upsr::detail::sobel_magnitude(pred, mp, gxp, gyp);
    upsr::detail::sobel_magnitude(target, mt, gxt, gyt);

    for (int trial = 0; trial < 12; ++trial) {
        const size_t j = static_cast<size_t>(rng.uniform_int(0, static_cast<int>(pred.v.size()) - 1));
        if (lambda != 0.0) {
            // FD is invalid across the |.| kink of the perceptual term and
            // inflates near the origin of the magnitude cone; skip
            // coordinates whose affected Sobel neighborhood is near either.
            const int y = static_cast<int>(j / (8 * 3)),
                      x = static_cast<int>(j / 3 % 8),
                      c = static_cast<int>(j % 3);
            bool invalid = false;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const int yy = std::clamp(y + dy, 0, 7), xx = std::clamp(x + dx, 0, 7);
                    if (std::abs(mp.at(yy, xx, c) - mt.at(yy, xx, c)) < 0.05) invalid = true;
                    if (mp.at(yy, xx, c) < 0.25) invalid = true;
                }
            if (invalid) {
                ++st.skipped;
                continue;
            }
        }
        Tensor<double> pp = pred, pm = pred;
        pp.v[j] += h;
        pm.v[j] -= h;
        const double fp = mixed_loss_t(pp, target, lambda).total;
        const double fm = mixed_loss_t(pm, target, lambda).total;
        fd_compare(st, base.grad.v[j], (fp - fm) / (2 * h), tol);
    }
}

/// Activation sign pattern of the hidden layers; a coordinate whose +/-h
/// evaluations land on different sides of a rectifier kink has no valid
/// central difference and is skipped.
std::vector<char> activation_pattern(const NetT<double>& net, const Tensor<double>& x_t,
                                     const Tensor<double>& y0, const Tensor<double>& g, int t) {
    ForwardTrace<double> tr = net_forward_trace(net, x_t, y0, g, t);
    std::vector<char> p;
    for (size_t l = 0; l + 1 < tr.pre.size(); ++l)
        for (double v : tr.pre[l].v) p.push_back(v > 0);
    return p;
}

void full_net_fd_trial(Rng& rng, FdStats& st, double h, double tol) {
    NetT<double> net;
    net.channels = 1;
    net.r = 2;
    net.hidden = 4;
    net.steps = 3;
    net.layers.resize(3);
    const int in0 = 3 * net.channels * net.r * net.r;
    const int out_last = net.channels * net.r * net.r;
    for (size_t l = 0; l < net.layers.size(); ++l) {
        auto& cl = net.layers[l];
        cl.k = 3;
        cl.in_ch = l == 0 ? in0 : net.hidden;
        cl.out_ch = l + 1 == net.layers.size() ? out_last : net.hidden;
        cl.w.resize(static_cast<size_t>(cl.in_ch) * cl.out_ch * 9);
        cl.b.resize(static_cast<size_t>(cl.out_ch));
        const double scale = std::sqrt(2.0 / (9.0 * cl.in_ch));
        for (auto& v : cl.w) v = scale * rng.normal();
        for (auto& v : cl.b) v = 0.05 * rng.normal();
    }
    net.t_table.resize(static_cast<size_t>(net.steps) * net.hidden);
    for (auto& v : net.t_table) v = 0.05 * rng.normal();

    Tensor<double> x_t(8, 8, 1), y0(8, 8, 1), g(8, 8, 1), target(8, 8, 1);
    for (auto& v : x_t.v) v = rng.uniform();
    for (auto& v : y0.v) v = rng.uniform();
    for (auto& v : g.v) v = rng.uniform();
    for (auto& v : target.v) v = rng.uniform();
    const int t = rng.uniform_int(1, net.steps);

    auto loss_of = [&](const NetT<double>& m) {
        return mixed_loss_t(net_forward(m, x_t, y0, g, t), target, 0.0).total;
    };

    ForwardTrace<double> tr = net_forward_trace(net, x_t, y0, g, t);
    const LossResult<double> loss = mixed_loss_t(tr.out, target, 0.0);
    NetGrads<double> grads = zero_grads(net);
    net_backward(net, tr, loss.grad, grads);

    auto check_coord = [&](auto&& perturb, double analytic) {
        NetT<double> np = net, nm = net;
        perturb(np, +h);
        perturb(nm, -h);
        if (activation_pattern(np, x_t, y0, g, t) != activation_pattern(nm, x_t, y0, g, t)) {
            ++st.skipped;
            return;
        }
        fd_compare(st, analytic, (loss_of(np) - loss_of(nm)) / (2 * h), tol);
    };

    for (int trial = 0; trial < 12; ++trial) {
        const size_t layer = static_cast<size_t>(rng.uniform_int(0, static_cast<int>(net.layers.size()) - 1));
        const size_t j =
            static_cast<size_t>(rng.uniform_int(0, static_cast<int>(net.layers[layer].w.size()) - 1));
        check_coord([&](NetT<double>& n, double d) { n.layers[layer].w[j] += d; },
                    grads.layers[layer].w[j]);
    }
    // timestep-table row used by this sample
    for (int ch = 0; ch < net.hidden; ++ch) {
        const size_t j = static_cast<size_t>(t - 1) * net.hidden + static_cast<size_t>(ch);
        check_coord([&](NetT<double>& n, double d) { n.t_table[j] += d; }, grads.t_table[j]);
    }
}

CheckResult check_gradients_fd(const Options& opt) {
    Timer timer;
    CheckResult res{"gradients.finite_difference", true, false, 0.0, json::object()};
    Rng rng = Rng(opt.seed).stream("gradients.finite_difference");
    const double h = 1e-3, tol = 1e-4;
    FdStats st;
    for (int trial = 0; trial < 100; ++trial) {
        conv_layer_fd_trial(rng, st, h, tol);
        mixed_loss_fd_trial(rng, st, tol, trial % 3 == 0 ? 0.0 : 1.0);
        if (trial % 10 == 0) full_net_fd_trial(rng, st, h, tol);
    }
    res.pass = st.pass;
    res.detail = {{"trials", 100},
                  {"coordinates_compared", st.compared},
                  {"kink_skipped", st.skipped},
                  {"worst_rel_error", st.worst_rel},
                  {"tolerance", tol},
                  {"epsilon", h}};
    res.seconds = timer.elapsed();
    return res;
}

// --- training checks -------------------------------------------------------

std::vector<TrainPair> make_toy_dataset(int count, int size, Rng& rng) {
    DegradationConfig dcfg;
    dcfg.scale = 2;
    dcfg.blur_lo = 0.5;
    dcfg.blur_hi = 1.5;
    dcfg.noise_lo = 0.0;
    dcfg.noise_hi = 0.02;
    dcfg.jpeg_enabled = false;
    std::vector<TrainPair> data;
    data.reserve(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) {
        TrainPair p;
        p.x0 = synth_patch(size, size, 3, rng);
        DegradedPair d = degrade_pair(p.x0, dcfg, rng);
        p.y0 = std::move(d.y0);
        data.push_back(std::move(p));
    }
    return data;
}

CheckResult check_training_overfit(const Options& opt) {
    Timer timer;
    CheckResult res{"training.overfit", true, false, 0.0, json::object()};
    Rng rng = Rng(opt.seed).stream("training.overfit");
    std::vector<TrainPair> data = make_toy_dataset(1, 32, rng);
    SmoothingPredictor predictor(2);
    NoiseSchedule s = default_schedule();

    TrainConfig cfg;
    cfg.iterations = 2000;
    cfg.batch_size = 1;
    cfg.lr = 0.25;
    cfg.lambda = 0.0;
    cfg.patch = 32;
    std::vector<TrainLogRow> log;
    Rng train_rng = rng.stream("train");
    train_denoiser(data, predictor, s, cfg, train_rng, &log);

    const double initial = log.front().loss;
    double final_avg = 0.0;
    const int tail = 25;
    for (int i = 0; i < tail; ++i) final_avg += log[log.size() - 1 - static_cast<size_t>(i)].loss;
    final_avg /= tail;
    res.pass = final_avg < 0.1 * initial;
    res.detail = {{"initial_loss", initial},
                  {"final_loss_tail_mean", final_avg},
                  {"required_fraction", 0.1},
                  {"iterations", cfg.iterations}};
    res.seconds = timer.elapsed();
    return res;
}

CheckResult check_training_toy_gain(const Options& opt) {
    Timer timer;
    CheckResult res{"training.toy_gain", true, false, 0.0, json::object()};
    if (!opt.include_training) {
        res.skipped = true;
        res.pass = true;
        res.detail = {{"note", "skipped (training disabled)"}};
        return res;
    }
    Rng rng = Rng(opt.seed).stream("training.toy_gain");
    std::vector<TrainPair> data = make_toy_dataset(1000, 32, rng);
    std::vector<TrainPair> held(data.end() - 100, data.end());
    data.resize(900);

    SmoothingPredictor predictor(2);
    NoiseSchedule s = default_schedule();
    TrainConfig cfg;
    cfg.iterations = 5000;
    cfg.batch_size = 4;
    cfg.lr = 0.15;
    cfg.lambda = 0.2;
    cfg.patch = 32;
    std::vector<TrainLogRow> log;
    Rng train_rng = rng.stream("train");
    TinyNetModel model = train_denoiser(data, predictor, s, cfg, train_rng, &log);
    TinyNetDenoiser denoiser(std::move(model));

    double psnr_out = 0.0, psnr_base = 0.0;
    Rng eval_rng = rng.stream("eval");
    for (const TrainPair& p : held) {
        const Image out = run_reverse_chain(p.y0, predictor, denoiser, s, WeightingConfig{}, eval_rng);
        psnr_out += psnr(out, p.x0);
        psnr_base += psnr(p.y0, p.x0);
    }
    psnr_out /= static_cast<double>(held.size());
    psnr_base /= static_cast<double>(held.size());
    const double gain = psnr_out - psnr_base;
    res.pass = gain >= 0.3;
    res.detail = {{"heldout_pairs", held.size()},
                  {"psnr_baseline_y0", psnr_base},
                  {"psnr_chain_output", psnr_out},
                  {"gain_db", gain},
                  {"required_gain_db", 0.3},
                  {"final_train_loss", log.back().loss}};
    res.seconds = timer.elapsed();
    return res;
}

CheckResult check_isotropic_reduction(const Options& opt) {
    Timer timer;
    CheckResult res{"isotropic.reduction", true, false, 0.0, json::object()};
    Rng rng = Rng(opt.seed).stream("isotropic.reduction");

    // b_u = 1 collapses the weight map to ones regardless of the input
    UncertaintyMap psi;
    psi.height = 16;
    psi.width = 16;
    psi.values.resize(256);
    for (auto& v : psi.values) v = static_cast<float>(rng.uniform_range(0.0, 0.2));
    const WeightMap ones = build_weight_map(psi, 1.0, WeightingDefaults::psi_max);
    bool all_one = true;
    for (float v : ones.values) all_one = all_one && v == 1.0f;
    res.pass = res.pass && all_one;

    // prior noise std uniform across flat and textured halves
    NoiseSchedule s = default_schedule();
    const int H = 64, W = 128;
    const Image y0 = half_flat_half_texture(H, W, 3, rng);
    const WeightMap wm = uniform_weight_map(H, W, 1.0f);
    MomentAccumulator flat, tex;
    for (int rep = 0; rep < 20; ++rep) {
        Image xT = sample_initial_state(y0, s, wm, rng);
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x)
                for (int c = 0; c < 3; ++c) {
                    double noise = static_cast<double>(xT.at(y, x, c)) - y0.at(y, x, c);
                    noise *= opt.variance_bug_scale;
                    if (x < W / 2 - 8)
                        flat.add(noise);
                    else if (x >= W / 2 + 8)
                        tex.add(noise);
                }
    }
    const double target = s.sigma_max();
    const Moments mf = flat.finish(), mt = tex.finish();
    const bool flat_ok = rel_close(mf.stddev, target, 0.01);
    const bool tex_ok = rel_close(mt.stddev, target, 0.01);
    const bool uniform_ok = rel_close(mf.stddev, mt.stddev, 0.01);
    res.pass = res.pass && flat_ok && tex_ok && uniform_ok;

    // per-step isotropic forward noise matches kappa * sqrt(alpha_t)
    const Image x0i = Image::constant(500, 500, 1, 0.3f);
    const Image y0i = Image::constant(500, 500, 1, 0.8f);
    const WeightMap wbig = uniform_weight_map(500, 500, 1.0f);
    json steps = json::array();
    for (int t = 1; t <= s.steps(); ++t) {
        const Image xt = forward_step(x0i, x0i, y0i, s, wbig, t, rng);
        const double mean_t = 0.3 + s.alpha(t) * (0.8 - 0.3);
        Image probe = xt;
        scale_about(probe, mean_t, opt.variance_bug_scale);
        const Moments m = image_moments(probe);
        const double target_std = s.kappa() * std::sqrt(s.alpha(t));
        const bool ok = rel_close(m.stddev, target_std, 0.01);
        steps.push_back({{"t", t}, {"target_std", target_std}, {"emp_std", m.stddev}, {"pass", ok}});
        res.pass = res.pass && ok;
    }

    res.detail = {{"weight_map_all_ones", all_one},
                  {"prior_target_std", target},
                  {"prior_flat_std", mf.stddev},
                  {"prior_textured_std", mt.stddev},
                  {"per_step", steps}};
    res.seconds = timer.elapsed();
    return res;
}

CheckResult check_format_roundtrips(const Options& opt) {
    Timer timer;
    CheckResult res{"format.roundtrips", true, false, 0.0, json::object()};
    Rng rng = Rng(opt.seed).stream("format.roundtrips");

    // shuffle/unshuffle identity, bit-exact
    bool shuffle_ok = true;
    for (int i = 0; i < 100; ++i) {
        const int r = rng.uniform_int(1, 4);
        const int h = r * rng.uniform_int(2, 12);
        const int w = r * rng.uniform_int(2, 12);
        const int c = rng.uniform_int(1, 3);
        const Image img = random_image(h, w, c, rng);
        const Image back = pixel_shuffle(pixel_unshuffle(img, r), r);
        shuffle_ok = shuffle_ok && back.data == img.data;
    }
    {
        const Image img = random_image(64, 64, 3, rng);
        shuffle_ok = shuffle_ok && pixel_shuffle(pixel_unshuffle(img, 2), 2).data == img.data;
    }
    res.pass = res.pass && shuffle_ok;

    // model container round trip + corruption handling
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / ("upsr_verify_" + std::to_string(opt.seed));
    fs::create_directories(dir);
    const std::string path = (dir / "model.upsr").string();

    TinyNetModel m = make_tinynet(3, 5, ModelRole::denoiser, 8, 3, 2);
    Rng init = rng.stream("init");
    randomize_params(m, init);
    save_model(m, path);
    const TinyNetModel loaded = load_model(path);
    bool roundtrip = loaded.channels == m.channels && loaded.steps == m.steps &&
                     loaded.t_table == m.t_table && loaded.layers.size() == m.layers.size();
    for (size_t l = 0; roundtrip && l < m.layers.size(); ++l)
        roundtrip = loaded.layers[l].w == m.layers[l].w && loaded.layers[l].b == m.layers[l].b;
    res.pass = res.pass && roundtrip;

    auto expect_failure = [&](const std::string& p, const char* what) {
        try {
            load_model(p);
        } catch (const ChecksumError&) {
            return std::string(what) == "checksum";
        } catch (const BadMagicError&) {
            return std::string(what) == "magic";
        } catch (const ModelFormatError&) {
            return std::string(what) == "format";
        }
        return false;
    };

    std::vector<char> bytes;
    {
        std::ifstream f(path, std::ios::binary);
        bytes.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
    }
    const std::string corrupt = (dir / "corrupt.upsr").string();
    {
        std::vector<char> mod = bytes;
        mod[mod.size() / 2] = static_cast<char>(mod[mod.size() / 2] ^ 0x5a);
        std::ofstream f(corrupt, std::ios::binary);
        f.write(mod.data(), static_cast<std::streamsize>(mod.size()));
    }
    const bool corrupt_ok = expect_failure(corrupt, "checksum");

    const std::string truncated = (dir / "truncated.upsr").string();
    {
        std::ofstream f(truncated, std::ios::binary);
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
    }
    const bool truncated_ok = expect_failure(truncated, "checksum");

    const std::string badmagic = (dir / "badmagic.upsr").string();
    {
        std::vector<char> mod = bytes;
        mod[0] = 'X';
        std::ofstream f(badmagic, std::ios::binary);
        f.write(mod.data(), static_cast<std::streamsize>(mod.size()));
    }
    const bool magic_ok = expect_failure(badmagic, "magic");

    res.pass = res.pass && corrupt_ok && truncated_ok && magic_ok;
    res.detail = {{"shuffle_roundtrips", 101},
                  {"shuffle_ok", shuffle_ok},
                  {"model_roundtrip_bit_exact", roundtrip},
                  {"corrupt_rejected", corrupt_ok},
                  {"truncated_rejected", truncated_ok},
                  {"bad_magic_rejected", magic_ok}};
    res.seconds = timer.elapsed();
    std::error_code ec;
    fs::remove_all(dir, ec);
    return res;
}

CheckResult check_residual_long_tail(const Options& opt) {
    Timer timer;
    CheckResult res{"residual.long_tail", true, false, 0.0, json::object()};
    Rng rng = Rng(opt.seed).stream("residual.long_tail");
    DegradationConfig dcfg;
    dcfg.scale = 2;
    dcfg.blur_lo = 0.8;
    dcfg.blur_hi = 2.2;
    dcfg.noise_lo = 0.0;
    dcfg.noise_hi = 0.04;
    dcfg.jpeg_enabled = true;

    Histogram h = make_histogram(0.01, 0.4);
    for (int i = 0; i < 100; ++i) {
        const Image hr = synth_patch(96, 96, 3, rng);
        const DegradedPair d = degrade_pair(hr, dcfg, rng);
        accumulate_residuals(h, d.y0, hr);
    }
    const int modal = h.modal_bin();
    bool monotone = true;
    int first_violation = -1;
    for (int i = modal; i + 1 < h.bins(); ++i)
        if (h.counts[static_cast<size_t>(i + 1)] > h.counts[static_cast<size_t>(i)]) {
            monotone = false;
            if (first_violation < 0) first_violation = i + 1;
        }
    res.pass = monotone;
    res.detail = {{"pairs", 100},
                  {"total_samples", h.total},
                  {"overflow", h.overflow},
                  {"modal_bin", modal},
                  {"monotone_beyond_mode", monotone},
                  {"first_violation_bin", first_violation},
                  {"counts", h.counts}};
    res.seconds = timer.elapsed();
    return res;
}

CheckResult check_kernels_serial_parallel(const Options& opt) {
    Timer timer;
    CheckResult res{"kernels.serial_parallel", true, false, 0.0, json::object()};
    Rng rng = Rng(opt.seed).stream("kernels.serial_parallel");
    json items = json::array();
    auto record = [&](const char* name, bool ok) {
        items.push_back({{"kernel", name}, {"bit_exact", ok}});
        res.pass = res.pass && ok;
    };

    const Image img = random_image(64, 96, 3, rng);
    record("bicubic_resize", bicubic_resize(img, 37, 51).data == serial::bicubic_resize(img, 37, 51).data);
    record("gaussian_blur", gaussian_blur(img, 1.7).data == serial::gaussian_blur(img, 1.7).data);
    record("downsample", downsample(img, 2).data == serial::downsample(img, 2).data);
    record("jpeg_like", jpeg_like(img, 40).data == serial::jpeg_like(img, 40).data);
    record("pixel_unshuffle", pixel_unshuffle(img, 2).data == serial::pixel_unshuffle(img, 2).data);
    record("nearest_upsample", nearest_upsample(img, 3).data == serial::nearest_upsample(img, 3).data);
    record("psnr", psnr(img, gaussian_blur(img, 1.0)) == serial::psnr(img, gaussian_blur(img, 1.0)));
    record("ssim", ssim(img, gaussian_blur(img, 1.0)) == serial::ssim(img, gaussian_blur(img, 1.0)));

    const Image x0 = random_image(64, 96, 3, rng);
    const WeightMap wm = uniform_weight_map(64, 96, 0.7f);
    NoiseSchedule s = default_schedule();
    Rng r1 = rng.stream("marginal");
    Rng r2 = rng.stream("marginal");
    record("sample_marginal", sample_marginal(x0, img, s, wm, 3, r1).data ==
                                  serial::sample_marginal(x0, img, s, wm, 3, r2).data);

    ConvLayer<float> l;
    l.in_ch = 3;
    l.out_ch = 4;
    l.k = 3;
    l.w.resize(static_cast<size_t>(l.in_ch) * l.out_ch * 9);
    l.b.resize(static_cast<size_t>(l.out_ch));
    for (auto& v : l.w) v = static_cast<float>(0.3 * rng.normal());
    for (auto& v : l.b) v = static_cast<float>(0.1 * rng.normal());
    const Tensor<float> tin = to_tensor(img);
    record("conv_forward", conv_forward(l, tin).v == serial::conv_forward(l, tin).v);

    res.detail = {{"kernels", items}};
    res.seconds = timer.elapsed();
    return res;
}

}  // namespace

const std::vector<Check>& all_checks() {
    static const std::vector<Check> checks = {
        {"schedule.telescoping", check_schedule_telescoping},
        {"schedule.monotonic", check_schedule_monotonic},
        {"rng.determinism", check_rng_determinism},
        {"weighting.anchors", check_weighting_anchors},
        {"marginal.moments", check_marginal_moments},
        {"composition.variance", check_composition_variance},
        {"reverse.posterior_tv", check_reverse_posterior_tv},
        {"reverse.final_determinism", check_reverse_final_determinism},
        {"chain.oracle_recovery", check_chain_oracle_recovery},
        {"unw.noise_differentiation", check_unw_differentiation},
        {"gradients.finite_difference", check_gradients_fd},
        {"training.overfit", check_training_overfit},
        {"training.toy_gain", check_training_toy_gain},
        {"isotropic.reduction", check_isotropic_reduction},
        {"format.roundtrips", check_format_roundtrips},
        {"residual.long_tail", check_residual_long_tail},
        {"kernels.serial_parallel", check_kernels_serial_parallel},
    };
    return checks;
}

std::vector<CheckResult> run_checks(const Options& opt, const std::string& filter) {
    std::vector<CheckResult> out;
    for (const Check& c : all_checks()) {
        if (!filter.empty() && c.name.find(filter) == std::string::npos) continue;
        out.push_back(c.fn(opt));
    }
    return out;
}

json report_json(const std::vector<CheckResult>& results) {
    json checks = json::array();
    for (const CheckResult& r : results)
        checks.push_back({{"name", r.name},
                          {"pass", r.pass},
                          {"skipped", r.skipped},
                          {"seconds", r.seconds},
                          {"detail", r.detail}});
    return {{"checks", checks}, {"all_pass", all_passed(results)}};
}

bool all_passed(const std::vector<CheckResult>& results) {
    for (const CheckResult& r : results)
        if (!r.pass) return false;
    return true;
}

}  // namespace upsr::verify
