// Serial-vs-OpenMP benchmark for the pixel kernels. The serial reference
// implementations are the ones the test suite uses to pin down the parallel
// kernels, so this doubles as a sanity check that both paths agree.

#include <omp.h>

#include <cstdio>
#include <functional>
#include <string>

#include "upsr/analysis.hpp"
#include "upsr/degradation.hpp"
#include "upsr/diffusion.hpp"
#include "upsr/resample.hpp"
#include "upsr/synth.hpp"
#include "upsr/tinynet.hpp"

using namespace upsr;

namespace {

double time_best_of(int reps, const std::function<void()>& fn) {
    double best = 1e30;
    for (int i = 0; i < reps; ++i) {
        const double t0 = omp_get_wtime();
        fn();
        best = std::min(best, omp_get_wtime() - t0);
    }
    return best;
}

void row(const char* name, double serial_s, double parallel_s, bool equal) {
    std::printf("%-22s %10.2f ms %10.2f ms %8.2fx   %s\n", name, serial_s * 1e3, parallel_s * 1e3,
                serial_s / parallel_s, equal ? "bit-exact" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
    const int size = argc > 1 ? std::atoi(argv[1]) : 512;
    const int reps = argc > 2 ? std::atoi(argv[2]) : 3;
    Rng rng(42);
    const Image img = random_image(size, size, 3, rng);

    std::printf("image %dx%dx3, best of %d, %d threads\n", size, size, reps, omp_get_max_threads());
    std::printf("%-22s %13s %13s %9s\n", "kernel", "serial", "openmp", "speedup");

    {
        Image a, b;
        const double ts = time_best_of(reps, [&] { a = serial::bicubic_resize(img, size * 2, size * 2); });
        const double tp = time_best_of(reps, [&] { b = bicubic_resize(img, size * 2, size * 2); });
        row("bicubic_resize 2x", ts, tp, a.data == b.data);
    }
    {
        Image a, b;
        const double ts = time_best_of(reps, [&] { a = serial::gaussian_blur(img, 2.0); });
        const double tp = time_best_of(reps, [&] { b = gaussian_blur(img, 2.0); });
        row("gaussian_blur s=2", ts, tp, a.data == b.data);
    }
    {
        Image a, b;
        const double ts = time_best_of(reps, [&] { a = serial::downsample(img, 4); });
        const double tp = time_best_of(reps, [&] { b = downsample(img, 4); });
        row("downsample 4x", ts, tp, a.data == b.data);
    }
    {
        Image a, b;
        const double ts = time_best_of(reps, [&] { a = serial::jpeg_like(img, 50); });
        const double tp = time_best_of(reps, [&] { b = jpeg_like(img, 50); });
        row("jpeg_like q=50", ts, tp, a.data == b.data);
    }
    {
        Image a, b;
        const double ts = time_best_of(reps, [&] { a = serial::pixel_unshuffle(img, 2); });
        const double tp = time_best_of(reps, [&] { b = pixel_unshuffle(img, 2); });
        row("pixel_unshuffle r=2", ts, tp, a.data == b.data);
    }
    {
        const Image blurred = gaussian_blur(img, 1.0);
        double a = 0, b = 0;
        const double ts = time_best_of(reps, [&] { a = serial::ssim(img, blurred); });
        const double tp = time_best_of(reps, [&] { b = ssim(img, blurred); });
        row("ssim 11x11", ts, tp, a == b);
    }
    {
        const Image x0 = random_image(size, size, 3, rng);
        const WeightMap w = uniform_weight_map(size, size, 0.7f);
        const NoiseSchedule s = default_schedule();
        Image a, b;
        const double ts = time_best_of(reps, [&] {
            Rng r = rng.stream("m");
            a = serial::sample_marginal(x0, img, s, w, 3, r);
        });
        const double tp = time_best_of(reps, [&] {
            Rng r = rng.stream("m");
            b = sample_marginal(x0, img, s, w, 3, r);
        });
        row("sample_marginal", ts, tp, a.data == b.data);
    }
    {
        ConvLayer<float> l;
        l.in_ch = 16;
        l.out_ch = 16;
        l.k = 3;
        l.w.resize(static_cast<size_t>(l.in_ch) * l.out_ch * 9);
        l.b.resize(static_cast<size_t>(l.out_ch));
        for (auto& v : l.w) v = static_cast<float>(0.2 * rng.normal());
        Tensor<float> in(size / 2, size / 2, l.in_ch);
        for (auto& v : in.v) v = static_cast<float>(rng.uniform());
        Tensor<float> a, b;
        const double ts = time_best_of(reps, [&] { a = serial::conv_forward(l, in); });
        const double tp = time_best_of(reps, [&] { b = conv_forward(l, in); });
        row("conv3x3 16->16", ts, tp, a.v == b.v);
    }
    return 0;
}
