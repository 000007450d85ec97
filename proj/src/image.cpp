#include "upsr/image.hpp"

#include <algorithm>

namespace upsr {

Image clamp01(const Image& img) {
    Image out = img;
    const int64_t n = static_cast<int64_t>(out.data.size());
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i)
        out.data[i] = std::clamp(out.data[i], 0.0f, 1.0f);
    return out;
}

double min_sample(const Image& img) {
    return *std::min_element(img.data.begin(), img.data.end());
}

double max_sample(const Image& img) {
    return *std::max_element(img.data.begin(), img.data.end());
}

double sum_samples(const Image& img) {
    // Per-row partials combined in row order: the total is independent of
    // the thread count.
    std::vector<double> row_sum(img.height, 0.0);
    const size_t row_len = static_cast<size_t>(img.width) * img.channels;
#pragma omp parallel for schedule(static)
    for (int y = 0; y < img.height; ++y) {
        double s = 0.0;
        const float* p = img.data.data() + static_cast<size_t>(y) * row_len;
        for (size_t i = 0; i < row_len; ++i) s += p[i];
        row_sum[y] = s;
    }
    double total = 0.0;
    for (double s : row_sum) total += s;
    return total;
}

}  // namespace upsr
