#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "upsr/image.hpp"
#include "upsr/schedule.hpp"

namespace upsr {

double mse(const Image& a, const Image& b);

/// 10*log10(1/MSE) with peak 1.0, capped at 99.0 dB so identical images do
/// not produce infinities in CSV pipelines.
double psnr(const Image& a, const Image& b);

/// Mean local SSIM: 11x11 Gaussian window (sigma 1.5), C1=(0.01)^2,
/// C2=(0.03)^2, valid window positions, channels averaged. Dims must be
/// >= 11.
double ssim(const Image& a, const Image& b);

constexpr double kPsnrCap = 99.0;

struct Histogram {
    double bin_width = 0.01;
    double lower = 0.0;
    double upper = 0.4;
    std::vector<int64_t> counts;
    int64_t total = 0;
    int64_t overflow = 0;  // values >= upper

    int bins() const { return static_cast<int>(counts.size()); }
    int modal_bin() const;
};

Histogram make_histogram(double bin_width, double cutoff);

/// Per-pixel, per-channel |y0 - x0| accumulated into the histogram.
void accumulate_residuals(Histogram& h, const Image& y0, const Image& x0);

Histogram residual_histogram(const std::vector<std::pair<Image, Image>>& pairs,
                             double bin_width = 0.01, double cutoff = 0.4);

struct MomentReport {
    double target_mean = 0.0, target_std = 0.0;
    double emp_mean = 0.0, emp_std = 0.0;
    long n = 0;
    double mean_tolerance = 0.0;  // 4 * target_std / sqrt(n)
    double std_tolerance = 0.0;   // relative: max(1%, 4/sqrt(2n))
    bool mean_pass = false, std_pass = false;

    bool pass() const { return mean_pass && std_pass; }
};

/// Draws n samples and tests both moments: mean within 4 standard errors,
/// std within max(1%, 4/sqrt(2n)) relative. A zero target std demands exact
/// agreement. Non-finite samples abort.
MomentReport mc_moment_check(const std::function<double()>& sample_fn, double target_mean,
                             double target_std, long n);

struct GridDensity {
    std::vector<double> x;
    std::vector<double> p;
    double normalization_error = 0.0;  // half-resolution integral discrepancy
    bool coarse = false;               // normalization_error > 1e-6
};

/// Brute-force reverse posterior q(x_{t-1} | x_t, x0, y0) on a grid:
/// product of the single-step forward density and the step t-1 marginal,
/// normalized by trapezoidal integration. Ground truth for reverse_step.
/// Requires t >= 2 (t = 1 is the deterministic case). The grid spans
/// span_sigmas posterior standard deviations around the posterior mean.
GridDensity bayes_grid_posterior(double x_t, double x0, double y0, const NoiseSchedule& s, double w,
                                 int t, int points = 4096, double span_sigmas = 12.0);

/// Same, on an explicit grid range.
GridDensity bayes_grid_posterior_range(double x_t, double x0, double y0, const NoiseSchedule& s,
                                       double w, int t, double lo, double hi, int points);

/// Closed-form reverse transition evaluated on a grid.
std::vector<double> reverse_density_closed_form(const std::vector<double>& grid, double x_t,
                                                double x0, const NoiseSchedule& s, double w, int t,
                                                double std_scale = 1.0);

/// Posterior mean and std of the closed-form reverse transition.
void reverse_moments(double x_t, double x0, const NoiseSchedule& s, double w, int t, double* mean,
                     double* stddev);

/// Half the trapezoidal integral of |p - q| over the density's grid.
double tv_distance(const GridDensity& d, const std::vector<double>& q);

double grid_mean(const GridDensity& d);
double trapezoid_mass(const GridDensity& d);

namespace serial {
double psnr(const Image& a, const Image& b);
double ssim(const Image& a, const Image& b);
}  // namespace serial

}  // namespace upsr
