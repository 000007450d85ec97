#pragma once

#include <memory>

#include "upsr/image.hpp"
#include "upsr/tinynet.hpp"

namespace upsr {

/// Auxiliary SR network g(.): maps the upsampled LR input to an SR estimate
/// of the same shape. Used both as conditioning and as the uncertainty
/// source.
class SRPredictor {
public:
    virtual ~SRPredictor() = default;
    virtual Image predict(const Image& y0) const = 0;
    virtual const char* name() const = 0;
};

/// g(y) = y. Forces psi = 0 everywhere, hence the all-b_u weight map.
class IdentityPredictor final : public SRPredictor {
public:
    Image predict(const Image& y0) const override { return y0; }
    const char* name() const override { return "identity"; }
};

/// g(y) = Gaussian blur of y with sigma = radius/2. Residual |g(y)-y|
/// vanishes on constant regions and concentrates on edges and texture.
class SmoothingPredictor final : public SRPredictor {
public:
    explicit SmoothingPredictor(int radius);
    Image predict(const Image& y0) const override;
    const char* name() const override { return "smooth"; }
    int radius() const { return radius_; }

private:
    int radius_;
};

/// Wraps a trained predictor-role net; pads inputs to a multiple of the
/// model's unshuffle factor and crops back.
class LearnedPredictor final : public SRPredictor {
public:
    explicit LearnedPredictor(TinyNetModel model);
    Image predict(const Image& y0) const override;
    const char* name() const override { return "learned"; }
    const TinyNetModel& model() const { return model_; }

private:
    TinyNetModel model_;
};

/// Reflect-pad an image so both dims are multiples of r.
Image pad_to_multiple(const Image& img, int r);
Image crop_to(const Image& img, int h, int w);

std::unique_ptr<SRPredictor> make_identity_predictor();
std::unique_ptr<SRPredictor> make_smoothing_predictor(int radius);
std::unique_ptr<SRPredictor> make_learned_predictor(const std::string& model_path);

}  // namespace upsr
