#include "upsr/denoiser.hpp"

#include "upsr/predictor.hpp"

namespace upsr {

OracleDenoiser::OracleDenoiser(Image x0, double error_std, Rng rng)
    : x0_(std::move(x0)), error_std_(error_std), rng_(rng) {
    if (error_std < 0.0) throw ParamError("oracle_denoiser: error_std must be >= 0");
}

Image OracleDenoiser::denoise(const Image& x_t, const Image&, const Image&, int) {
    require_same_shape(x_t, x0_, "oracle_denoiser");
    if (error_std_ == 0.0) return x0_;
    Image out = x0_;
    std::vector<float> noise(out.data.size());
    rng_.fill_normal(noise);
    for (size_t i = 0; i < out.data.size(); ++i)
        out.data[i] += static_cast<float>(error_std_) * noise[i];
    return out;
}

TinyNetDenoiser::TinyNetDenoiser(TinyNetModel model) : model_(std::move(model)) {
    if (model_.role != ModelRole::denoiser)
        throw ModelFormatError("tinynet_denoiser: model role tag is not 'denoiser'");
}

Image TinyNetDenoiser::denoise(const Image& x_t, const Image& y0, const Image& g_y0, int t) {
    require_same_shape(x_t, y0, "tinynet_denoiser");
    require_same_shape(x_t, g_y0, "tinynet_denoiser");
    if (x_t.height % model_.r == 0 && x_t.width % model_.r == 0)
        return tinynet_forward(model_, x_t, y0, g_y0, t);
    const Image px = pad_to_multiple(x_t, model_.r);
    const Image py = pad_to_multiple(y0, model_.r);
    const Image pg = pad_to_multiple(g_y0, model_.r);
    return crop_to(tinynet_forward(model_, px, py, pg, t), x_t.height, x_t.width);
}

}  // namespace upsr
