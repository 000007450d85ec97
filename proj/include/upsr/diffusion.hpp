#pragma once

#include <functional>

#include "upsr/denoiser.hpp"
#include "upsr/image.hpp"
#include "upsr/predictor.hpp"
#include "upsr/rng.hpp"
#include "upsr/schedule.hpp"
#include "upsr/uncertainty.hpp"

namespace upsr {

/// One forward step: x_t = x_prev + alpha_t*(y0 - x0) + kappa*w (.) sqrt(alpha_t)*xi,
/// the weight broadcast over channels of each pixel.
Image forward_step(const Image& x_prev, const Image& x0, const Image& y0, const NoiseSchedule& s,
                   const WeightMap& w, int t, Rng& rng);

/// Direct jump to step t: x_t = x0 + eta_t*(y0 - x0) + kappa*w (.) sqrt(eta_t)*xi.
/// t = 0 returns x0 exactly.
Image sample_marginal(const Image& x0, const Image& y0, const NoiseSchedule& s, const WeightMap& w,
                      int t, Rng& rng);

/// Inference-time prior: x_T = y0 + kappa*w (.) sqrt(eta_T)*xi. The unknown
/// (1 - eta_T)*(x0 - y0) mean term is dropped; its size is bounded by
/// (1 - eta_T) * |x0 - y0|.
Image sample_initial_state(const Image& y0, const NoiseSchedule& s, const WeightMap& w, Rng& rng);

/// One reverse step:
///   x_{t-1} = (eta_{t-1}/eta_t)*x_t + (alpha_t/eta_t)*x0_hat
///             + kappa*w (.) sqrt((eta_{t-1}/eta_t)*alpha_t)*xi.
/// At t = 1 (eta_0 = 0) the step is deterministic and returns x0_hat exactly.
Image reverse_step(const Image& x_t, const Image& x0_hat, const NoiseSchedule& s, const WeightMap& w,
                   int t, Rng& rng);

struct WeightingConfig {
    double b_u = WeightingDefaults::b_u;
    double psi_max = WeightingDefaults::psi_max;
    int smooth_radius = 0;
};

struct ChainStep {
    int t = 0;                   // step just completed (x_t -> x_{t-1})
    const Image& x_next;         // state after the step
    const Image& mean_part;      // deterministic part of the step
    double eta_t = 0.0;
    double alpha_t = 0.0;
    double noise_scale = 0.0;    // kappa * sqrt((eta_{t-1}/eta_t) * alpha_t)
};

using ChainObserver = std::function<void(const ChainStep&)>;

struct ChainResult {
    Image output;      // clamp01 of the final state
    Image g_y0;        // predictor output
    UncertaintyMap psi;
    WeightMap weights;
};

/// Full reverse chain: predictor -> uncertainty -> weights -> prior sample,
/// then reverse steps from T down to 1, querying the denoiser for x0_hat at
/// each step. The weight map is computed once from y0 and frozen.
ChainResult run_reverse_chain_detailed(const Image& y0, const SRPredictor& predictor,
                                       Denoiser& denoiser, const NoiseSchedule& s,
                                       const WeightingConfig& cfg, Rng& rng,
                                       const ChainObserver& observer = nullptr);

Image run_reverse_chain(const Image& y0, const SRPredictor& predictor, Denoiser& denoiser,
                        const NoiseSchedule& s, const WeightingConfig& cfg, Rng& rng);

namespace serial {
Image forward_step(const Image& x_prev, const Image& x0, const Image& y0, const NoiseSchedule& s,
                   const WeightMap& w, int t, Rng& rng);
Image sample_marginal(const Image& x0, const Image& y0, const NoiseSchedule& s, const WeightMap& w,
                      int t, Rng& rng);
}  // namespace serial

}  // namespace upsr
