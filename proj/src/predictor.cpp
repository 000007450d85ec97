#include "upsr/predictor.hpp"

#include "upsr/degradation.hpp"

namespace upsr {

Image pad_to_multiple(const Image& img, int r) {
    const int ph = (r - img.height % r) % r;
    const int pw = (r - img.width % r) % r;
    if (ph == 0 && pw == 0) return img;
    Image out(img.height + ph, img.width + pw, img.channels);
    for (int y = 0; y < out.height; ++y) {
        const int sy = y < img.height ? y : 2 * img.height - 2 - y;
        for (int x = 0; x < out.width; ++x) {
            const int sx = x < img.width ? x : 2 * img.width - 2 - x;
            for (int c = 0; c < img.channels; ++c) out.at(y, x, c) = img.at(sy, sx, c);
        }
    }
    return out;
}

Image crop_to(const Image& img, int h, int w) {
    if (h == img.height && w == img.width) return img;
    Image out(h, w, img.channels);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < img.channels; ++c) out.at(y, x, c) = img.at(y, x, c);
    return out;
}

SmoothingPredictor::SmoothingPredictor(int radius) : radius_(radius) {
    if (radius < 1) throw ParamError("smoothing_predictor: radius must be >= 1");
}

Image SmoothingPredictor::predict(const Image& y0) const {
    return gaussian_blur(y0, radius_ / 2.0);
}

LearnedPredictor::LearnedPredictor(TinyNetModel model) : model_(std::move(model)) {
    if (model_.role != ModelRole::predictor)
        throw ModelFormatError("learned_predictor: model role tag is not 'predictor'");
}

Image LearnedPredictor::predict(const Image& y0) const {
    if (y0.channels != model_.channels)
        throw ShapeError("learned_predictor: model expects " + std::to_string(model_.channels) +
                         " channels, got " + std::to_string(y0.channels));
    const Image padded = pad_to_multiple(y0, model_.r);
    // predictor nets condition on the input itself in all three slots, t = 1
    const Image out = tinynet_forward(model_, padded, padded, padded, 1);
    return crop_to(out, y0.height, y0.width);
}

std::unique_ptr<SRPredictor> make_identity_predictor() {
    return std::make_unique<IdentityPredictor>();
}

std::unique_ptr<SRPredictor> make_smoothing_predictor(int radius) {
    return std::make_unique<SmoothingPredictor>(radius);
}

std::unique_ptr<SRPredictor> make_learned_predictor(const std::string& model_path) {
    return std::make_unique<LearnedPredictor>(load_model(model_path));
}

}  // namespace upsr
