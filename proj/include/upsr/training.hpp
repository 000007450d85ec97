#pragma once

#include <vector>

#include "upsr/diffusion.hpp"

namespace upsr {

struct TrainPair {
    Image x0;  // HR target
    Image y0;  // degraded input, upsampled to HR dims
};

struct TrainConfig {
    int iterations = 2000;
    int batch_size = 4;
    double lr = 0.2;
    double lambda = 1.0;  // perceptual weight in the mixed loss
    uint64_t seed = 0;
    int patch = 32;   // random-crop size; images smaller than this are used whole
    int r = 2;        // unshuffle factor of the trained net
    int hidden = 16;
    int n_layers = 4;
    double b_u = WeightingDefaults::b_u;
    double psi_max = WeightingDefaults::psi_max;
    int smooth_radius = 0;

    void validate() const;
};

struct TrainLogRow {
    int iteration = 0;
    double loss = 0.0;
    double mse = 0.0;
    double perceptual = 0.0;
};

/// Denoiser training: per iteration sample a pair and t ~ U(1,T), compute
/// g(y0) and the weight map, draw x_t from the weighted marginal, and take
/// an SGD step on the mixed loss. Deterministic given (dataset order, rng
/// stream, config). Throws on a non-finite loss.
TinyNetModel train_denoiser(const std::vector<TrainPair>& dataset, const SRPredictor& predictor,
                            const NoiseSchedule& s, const TrainConfig& cfg, Rng& rng,
                            std::vector<TrainLogRow>* log = nullptr);

/// Supervised L1 training of the same net family on (y0 -> x0); produces
/// predictor-role models for learned_predictor.
TinyNetModel train_predictor(const std::vector<TrainPair>& dataset, const TrainConfig& cfg, Rng& rng,
                             std::vector<TrainLogRow>* log = nullptr);

}  // namespace upsr
