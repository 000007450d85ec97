#pragma once

#include "upsr/image.hpp"
#include "upsr/rng.hpp"
#include "upsr/tinynet.hpp"

namespace upsr {

/// The denoiser contract f(x_t, y0, g(y0), t) -> x0_hat, same shape as x_t.
class Denoiser {
public:
    virtual ~Denoiser() = default;
    virtual Image denoise(const Image& x_t, const Image& y0, const Image& g_y0, int t) = 0;
};

/// Ground-truth-aware probe: returns x0 plus optional Gaussian error, fresh
/// draw per call. error_std = 0 is the perfect oracle. Verifies the sampler
/// independent of any learning.
class OracleDenoiser final : public Denoiser {
public:
    OracleDenoiser(Image x0, double error_std, Rng rng);
    Image denoise(const Image& x_t, const Image& y0, const Image& g_y0, int t) override;

private:
    Image x0_;
    double error_std_;
    Rng rng_;
};

/// x0_hat = x_t: turns the reverse chain into deterministic mean updates
/// when kappa = 0. Smoke-test double.
class PassthroughDenoiser final : public Denoiser {
public:
    Image denoise(const Image& x_t, const Image&, const Image&, int) override { return x_t; }
};

/// Trained tiny net; pads inputs to a multiple of the model's r and crops
/// the prediction back.
class TinyNetDenoiser final : public Denoiser {
public:
    explicit TinyNetDenoiser(TinyNetModel model);
    Image denoise(const Image& x_t, const Image& y0, const Image& g_y0, int t) override;
    const TinyNetModel& model() const { return model_; }

private:
    TinyNetModel model_;
};

}  // namespace upsr
