#include "upsr/diffusion.hpp"

#include <cmath>

namespace upsr {

namespace {

struct Term {
    double coef;
    const Image* img;
};

void check_weight_dims(const Image& ref, const WeightMap& w, const char* what) {
    if (w.height != ref.height || w.width != ref.width)
        throw ShapeError(std::string(what) + ": weight map " + std::to_string(w.height) + "x" +
                         std::to_string(w.width) + " does not match image " + ref.shape_string());
}

// out_i = sum_k coef_k * img_k[i] + noise_scale * w(pixel(i)) * xi_i.
// Noise indices are counter-based, so the parallel fill matches a serial
// draw-by-draw evaluation bit for bit.
template <bool kParallel>
Image combine_impl(std::initializer_list<Term> terms, const WeightMap& w, double noise_scale,
                   Rng& rng, Image* mean_out) {
    const Image& ref = *terms.begin()->img;
    for (const Term& t : terms) require_same_shape(ref, *t.img, "diffusion step");
    check_weight_dims(ref, w, "diffusion step");

    Image out(ref.height, ref.width, ref.channels);
    std::vector<float> noise;
    if (noise_scale != 0.0) {
        noise.resize(out.data.size());
        if constexpr (kParallel) {
            rng.fill_normal(noise);
        } else {
            for (auto& v : noise) v = static_cast<float>(rng.normal());
        }
    }
    if (mean_out) *mean_out = Image(ref.height, ref.width, ref.channels);

    const int C = ref.channels;
    const int W = ref.width;
    auto row_body = [&](int y) {
        for (int x = 0; x < W; ++x) {
            const double wv = w.at(y, x);
            for (int c = 0; c < C; ++c) {
                const size_t i = (static_cast<size_t>(y) * W + x) * static_cast<size_t>(C) +
                                 static_cast<size_t>(c);
                double acc = 0.0;
                for (const Term& t : terms) acc += t.coef * t.img->data[i];
                if (mean_out) mean_out->data[i] = static_cast<float>(acc);
                if (noise_scale != 0.0) acc += noise_scale * wv * noise[i];
                out.data[i] = static_cast<float>(acc);
            }
        }
    };
    if constexpr (kParallel) {
#pragma omp parallel for schedule(static)
        for (int y = 0; y < ref.height; ++y) row_body(y);
    } else {
        for (int y = 0; y < ref.height; ++y) row_body(y);
    }
    return out;
}

Image combine(std::initializer_list<Term> terms, const WeightMap& w, double noise_scale, Rng& rng,
              Image* mean_out = nullptr) {
    return combine_impl<true>(terms, w, noise_scale, rng, mean_out);
}

void check_step(int t, int lo, const NoiseSchedule& s, const char* what) {
    if (t < lo || t > s.steps())
        throw ParamError(std::string(what) + ": step " + std::to_string(t) + " outside [" +
                         std::to_string(lo) + ", " + std::to_string(s.steps()) + "]");
}

Image reverse_step_impl(const Image& x_t, const Image& x0_hat, const NoiseSchedule& s,
                        const WeightMap& w, int t, Rng& rng, Image* mean_out) {
    check_step(t, 1, s, "reverse_step");
    require_same_shape(x_t, x0_hat, "reverse_step");
    if (t == 1) {
        // eta_0 = 0 zeroes both the x_t coefficient and the variance: the
        // final step is deterministic and independent of x_t and the rng.
        if (mean_out) *mean_out = x0_hat;
        return x0_hat;
    }
    const double eta_prev = s.eta(t - 1);
    const double eta_t = s.eta(t);
    const double alpha_t = s.alpha(t);
    const double c_xt = eta_prev / eta_t;
    const double c_x0 = alpha_t / eta_t;
    const double scale = s.kappa() * std::sqrt(c_xt * alpha_t);
    return combine({{c_xt, &x_t}, {c_x0, &x0_hat}}, w, scale, rng, mean_out);
}

}  // namespace

Image forward_step(const Image& x_prev, const Image& x0, const Image& y0, const NoiseSchedule& s,
                   const WeightMap& w, int t, Rng& rng) {
    check_step(t, 1, s, "forward_step");
    const double a = s.alpha(t);
    return combine({{1.0, &x_prev}, {a, &y0}, {-a, &x0}}, w, s.kappa() * std::sqrt(a), rng);
}

Image sample_marginal(const Image& x0, const Image& y0, const NoiseSchedule& s, const WeightMap& w,
                      int t, Rng& rng) {
    check_step(t, 0, s, "sample_marginal");
    if (t == 0) return x0;  // eta_0 = 0
    const double eta = s.eta(t);
    return combine({{1.0 - eta, &x0}, {eta, &y0}}, w, s.kappa() * std::sqrt(eta), rng);
}

Image sample_initial_state(const Image& y0, const NoiseSchedule& s, const WeightMap& w, Rng& rng) {
    const double eta_T = s.eta(s.steps());
    return combine({{1.0, &y0}}, w, s.kappa() * std::sqrt(eta_T), rng);
}

Image reverse_step(const Image& x_t, const Image& x0_hat, const NoiseSchedule& s, const WeightMap& w,
                   int t, Rng& rng) {
    return reverse_step_impl(x_t, x0_hat, s, w, t, rng, nullptr);
}

ChainResult run_reverse_chain_detailed(const Image& y0, const SRPredictor& predictor,
                                       Denoiser& denoiser, const NoiseSchedule& s,
                                       const WeightingConfig& cfg, Rng& rng,
                                       const ChainObserver& observer) {
    ChainResult res;
    res.g_y0 = predictor.predict(y0);
    require_same_shape(y0, res.g_y0, "run_reverse_chain: predictor output");
    res.psi = box_smooth(estimate_uncertainty(y0, res.g_y0), cfg.smooth_radius);
    res.weights = build_weight_map(res.psi, cfg.b_u, cfg.psi_max);

    Image x = sample_initial_state(y0, s, res.weights, rng);
    for (int t = s.steps(); t >= 1; --t) {
        const Image x0_hat = denoiser.denoise(x, y0, res.g_y0, t);
        if (!x0_hat.same_shape(x))
            throw ShapeError("run_reverse_chain: denoiser returned " + x0_hat.shape_string() +
                             " for state " + x.shape_string());
        Image mean;
        x = reverse_step_impl(x, x0_hat, s, res.weights, t, rng, observer ? &mean : nullptr);
        if (observer) {
            const double eta_prev = s.eta(t - 1);
            const double scale =
                t == 1 ? 0.0 : s.kappa() * std::sqrt(eta_prev / s.eta(t) * s.alpha(t));
            observer(ChainStep{t, x, mean, s.eta(t), s.alpha(t), scale});
        }
    }
    res.output = clamp01(x);
    return res;
}

Image run_reverse_chain(const Image& y0, const SRPredictor& predictor, Denoiser& denoiser,
                        const NoiseSchedule& s, const WeightingConfig& cfg, Rng& rng) {
    return run_reverse_chain_detailed(y0, predictor, denoiser, s, cfg, rng).output;
}

namespace serial {

Image forward_step(const Image& x_prev, const Image& x0, const Image& y0, const NoiseSchedule& s,
                   const WeightMap& w, int t, Rng& rng) {
    check_step(t, 1, s, "forward_step");
    const double a = s.alpha(t);
    return combine_impl<false>({{1.0, &x_prev}, {a, &y0}, {-a, &x0}}, w,
                               s.kappa() * std::sqrt(a), rng, nullptr);
}

Image sample_marginal(const Image& x0, const Image& y0, const NoiseSchedule& s, const WeightMap& w,
                      int t, Rng& rng) {
    check_step(t, 0, s, "sample_marginal");
    if (t == 0) return x0;
    const double eta = s.eta(t);
    return combine_impl<false>({{1.0 - eta, &x0}, {eta, &y0}}, w, s.kappa() * std::sqrt(eta), rng,
                               nullptr);
}

}  // namespace serial

}  // namespace upsr
