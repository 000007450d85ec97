#include "upsr/analysis.hpp"

#include <algorithm>
#include <cmath>

namespace upsr {

namespace {

double mse_impl(const Image& a, const Image& b, bool parallel) {
    require_same_shape(a, b, "mse");
    std::vector<double> row_sum(static_cast<size_t>(a.height), 0.0);
    const size_t row_len = static_cast<size_t>(a.width) * a.channels;
    auto body = [&](int y) {
        const float* pa = a.data.data() + static_cast<size_t>(y) * row_len;
        const float* pb = b.data.data() + static_cast<size_t>(y) * row_len;
        double s = 0.0;
        for (size_t i = 0; i < row_len; ++i) {
            const double d = static_cast<double>(pa[i]) - static_cast<double>(pb[i]);
            s += d * d;
        }
        row_sum[static_cast<size_t>(y)] = s;
    };
    if (parallel) {
#pragma omp parallel for schedule(static)
        for (int y = 0; y < a.height; ++y) body(y);
    } else {
        for (int y = 0; y < a.height; ++y) body(y);
    }
    double total = 0.0;
    for (double s : row_sum) total += s;
    return total / static_cast<double>(a.sample_count());
}

double psnr_from_mse(double m) {
    if (m <= 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(1.0 / m));
}

struct SsimWindow {
    static constexpr int kSize = 11;
    double w[kSize][kSize];
    SsimWindow() {
        const double sigma = 1.5;
        double sum = 0.0;
        for (int y = 0; y < kSize; ++y)
            for (int x = 0; x < kSize; ++x) {
                const double dy = y - kSize / 2, dx = x - kSize / 2;
                w[y][x] = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
                sum += w[y][x];
            }
        for (int y = 0; y < kSize; ++y)
            for (int x = 0; x < kSize; ++x) w[y][x] /= sum;
    }
};

const SsimWindow& ssim_window() {
    static const SsimWindow win;
    return win;
}

double ssim_impl(const Image& a, const Image& b, bool parallel) {
    require_same_shape(a, b, "ssim");
    constexpr int S = SsimWindow::kSize;
    if (a.height < S || a.width < S)
        throw ShapeError("ssim: dims must be >= 11, got " + a.shape_string());
    constexpr double C1 = 0.01 * 0.01;
    constexpr double C2 = 0.03 * 0.03;
    const SsimWindow& win = ssim_window();
    const int oh = a.height - S + 1;
    const int ow = a.width - S + 1;
    std::vector<double> row_sum(static_cast<size_t>(oh), 0.0);
    auto body = [&](int oy) {
        double s = 0.0;
        for (int ox = 0; ox < ow; ++ox)
            for (int c = 0; c < a.channels; ++c) {
                double ma = 0.0, mb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
                for (int y = 0; y < S; ++y)
                    for (int x = 0; x < S; ++x) {
                        const double va = a.at(oy + y, ox + x, c);
                        const double vb = b.at(oy + y, ox + x, c);
                        const double wv = win.w[y][x];
                        ma += wv * va;
                        mb += wv * vb;
                        saa += wv * va * va;
                        sbb += wv * vb * vb;
                        sab += wv * va * vb;
                    }
                const double va = saa - ma * ma;
                const double vb = sbb - mb * mb;
                const double cov = sab - ma * mb;
                s += ((2.0 * ma * mb + C1) * (2.0 * cov + C2)) /
                     ((ma * ma + mb * mb + C1) * (va + vb + C2));
            }
        row_sum[static_cast<size_t>(oy)] = s;
    };
    if (parallel) {
#pragma omp parallel for schedule(static)
        for (int oy = 0; oy < oh; ++oy) body(oy);
    } else {
        for (int oy = 0; oy < oh; ++oy) body(oy);
    }
    double total = 0.0;
    for (double s : row_sum) total += s;
    return total / (static_cast<double>(oh) * ow * a.channels);
}

}  // namespace

double mse(const Image& a, const Image& b) { return mse_impl(a, b, true); }

double psnr(const Image& a, const Image& b) { return psnr_from_mse(mse_impl(a, b, true)); }

double ssim(const Image& a, const Image& b) { return ssim_impl(a, b, true); }

namespace serial {
double psnr(const Image& a, const Image& b) { return psnr_from_mse(mse_impl(a, b, false)); }
double ssim(const Image& a, const Image& b) { return ssim_impl(a, b, false); }
}  // namespace serial

// ---------------------------------------------------------------------------

int Histogram::modal_bin() const {
    return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

Histogram make_histogram(double bin_width, double cutoff) {
    if (!(bin_width > 0.0) || !(cutoff > bin_width))
        throw ParamError("histogram: need bin_width > 0 and cutoff > bin_width");
    Histogram h;
    h.bin_width = bin_width;
    h.lower = 0.0;
    h.upper = cutoff;
    h.counts.assign(static_cast<size_t>(std::ceil(cutoff / bin_width - 1e-9)), 0);
    return h;
}

void accumulate_residuals(Histogram& h, const Image& y0, const Image& x0) {
    require_same_shape(y0, x0, "residual_histogram");
    const int nbins = h.bins();
    for (size_t i = 0; i < y0.data.size(); ++i) {
        const double v = std::abs(static_cast<double>(y0.data[i]) - static_cast<double>(x0.data[i]));
        const int bin = static_cast<int>((v - h.lower) / h.bin_width);
        if (bin >= nbins)
            ++h.overflow;
        else
            ++h.counts[static_cast<size_t>(bin)];
        ++h.total;
    }
}

Histogram residual_histogram(const std::vector<std::pair<Image, Image>>& pairs, double bin_width,
                             double cutoff) {
    Histogram h = make_histogram(bin_width, cutoff);
    for (const auto& [y0, x0] : pairs) accumulate_residuals(h, y0, x0);
    return h;
}

// ---------------------------------------------------------------------------

MomentReport mc_moment_check(const std::function<double()>& sample_fn, double target_mean,
                             double target_std, long n) {
    if (n < 1000) throw ParamError("mc_moment_check: n must be >= 1000");
    MomentReport rep;
    rep.target_mean = target_mean;
    rep.target_std = target_std;
    rep.n = n;

    // Welford
    double mean = 0.0, m2 = 0.0;
    for (long i = 0; i < n; ++i) {
        const double v = sample_fn();
        if (!std::isfinite(v))
            throw Error("mc_moment_check: non-finite sample " + std::to_string(v) + " at draw " +
                        std::to_string(i));
        const double d = v - mean;
        mean += d / static_cast<double>(i + 1);
        m2 += d * (v - mean);
    }
    rep.emp_mean = mean;
    rep.emp_std = std::sqrt(m2 / static_cast<double>(n - 1));

    rep.mean_tolerance = 4.0 * target_std / std::sqrt(static_cast<double>(n));
    rep.std_tolerance = std::max(0.01, 4.0 / std::sqrt(2.0 * static_cast<double>(n)));
    if (target_std == 0.0) {
        rep.mean_pass = rep.emp_mean == target_mean;
        rep.std_pass = rep.emp_std == 0.0;
    } else {
        rep.mean_pass = std::abs(rep.emp_mean - target_mean) < rep.mean_tolerance;
        rep.std_pass = std::abs(rep.emp_std / target_std - 1.0) < rep.std_tolerance;
    }
    return rep;
}

// ---------------------------------------------------------------------------

void reverse_moments(double x_t, double x0, const NoiseSchedule& s, double w, int t, double* mean,
                     double* stddev) {
    if (t < 1 || t > s.steps()) throw ParamError("reverse_moments: t out of range");
    const double eta_prev = s.eta(t - 1);
    const double eta_t = s.eta(t);
    const double alpha_t = s.alpha(t);
    if (mean) *mean = eta_prev / eta_t * x_t + alpha_t / eta_t * x0;
    if (stddev) *stddev = s.kappa() * w * std::sqrt(eta_prev / eta_t * alpha_t);
}

namespace {

GridDensity grid_posterior(double x_t, double x0, double y0, const NoiseSchedule& s, double w, int t,
                           double lo, double hi, int points) {
    if (t < 2 || t > s.steps())
        throw ParamError("bayes_grid_posterior: t must be in [2, T], got " + std::to_string(t));
    if (points < 16) throw ParamError("bayes_grid_posterior: too few grid points");
    if (!(s.kappa() * w > 0.0)) throw ParamError("bayes_grid_posterior: kappa*w must be > 0");

    const double eta_prev = s.eta(t - 1);
    const double alpha_t = s.alpha(t);
    const double var_fwd = s.kappa() * s.kappa() * w * w * alpha_t;       // q(x_t | x_{t-1})
    const double var_marg = s.kappa() * s.kappa() * w * w * eta_prev;     // q(x_{t-1} | x0)
    const double mu_marg = x0 + eta_prev * (y0 - x0);

    GridDensity d;
    d.x.resize(static_cast<size_t>(points));
    d.p.resize(static_cast<size_t>(points));
    const double step = (hi - lo) / (points - 1);
    std::vector<double> logp(static_cast<size_t>(points));
    double max_log = -1e300;
    for (int i = 0; i < points; ++i) {
        const double xv = lo + step * i;
        d.x[static_cast<size_t>(i)] = xv;
        const double d_fwd = x_t - (xv + alpha_t * (y0 - x0));
        const double d_marg = xv - mu_marg;
        const double lp = -0.5 * (d_fwd * d_fwd / var_fwd + d_marg * d_marg / var_marg);
        logp[static_cast<size_t>(i)] = lp;
        max_log = std::max(max_log, lp);
    }
    for (int i = 0; i < points; ++i)
        d.p[static_cast<size_t>(i)] = std::exp(logp[static_cast<size_t>(i)] - max_log);

    auto trapz = [&](int stride) {
        double acc = 0.0;
        for (int i = 0; i + stride < points; i += stride)
            acc += 0.5 * (d.p[static_cast<size_t>(i)] + d.p[static_cast<size_t>(i + stride)]) *
                   (stride * step);
        return acc;
    };
    const double mass = trapz(1);
    if (!(mass > 0.0)) throw Error("bayes_grid_posterior: grid misses the posterior mass");
    const double mass_coarse = trapz(2);
    d.normalization_error = std::abs(mass_coarse - mass) / mass;
    d.coarse = d.normalization_error > 1e-6;
    for (auto& p : d.p) p /= mass;
    return d;
}

}  // namespace

GridDensity bayes_grid_posterior(double x_t, double x0, double y0, const NoiseSchedule& s, double w,
                                 int t, int points, double span_sigmas) {
    double mu, sd;
    reverse_moments(x_t, x0, s, w, t, &mu, &sd);
    const double half = 0.5 * span_sigmas * sd;
    return grid_posterior(x_t, x0, y0, s, w, t, mu - half, mu + half, points);
}

GridDensity bayes_grid_posterior_range(double x_t, double x0, double y0, const NoiseSchedule& s,
                                       double w, int t, double lo, double hi, int points) {
    if (!(hi > lo)) throw ParamError("bayes_grid_posterior: empty grid range");
    return grid_posterior(x_t, x0, y0, s, w, t, lo, hi, points);
}

std::vector<double> reverse_density_closed_form(const std::vector<double>& grid, double x_t,
                                                double x0, const NoiseSchedule& s, double w, int t,
                                                double std_scale) {
    double mu, sd;
    reverse_moments(x_t, x0, s, w, t, &mu, &sd);
    sd *= std_scale;
    std::vector<double> p(grid.size());
    const double norm = 1.0 / (sd * std::sqrt(2.0 * 3.14159265358979323846));
    for (size_t i = 0; i < grid.size(); ++i) {
        const double z = (grid[i] - mu) / sd;
        p[i] = norm * std::exp(-0.5 * z * z);
    }
    return p;
}

double tv_distance(const GridDensity& d, const std::vector<double>& q) {
    if (q.size() != d.p.size()) throw ParamError("tv_distance: grid size mismatch");
    double acc = 0.0;
    for (size_t i = 0; i + 1 < d.p.size(); ++i) {
        const double a = std::abs(d.p[i] - q[i]);
        const double b = std::abs(d.p[i + 1] - q[i + 1]);
        acc += 0.5 * (a + b) * (d.x[i + 1] - d.x[i]);
    }
    return 0.5 * acc;
}

double trapezoid_mass(const GridDensity& d) {
    double acc = 0.0;
    for (size_t i = 0; i + 1 < d.p.size(); ++i)
        acc += 0.5 * (d.p[i] + d.p[i + 1]) * (d.x[i + 1] - d.x[i]);
    return acc;
}

double grid_mean(const GridDensity& d) {
    double acc = 0.0;
    for (size_t i = 0; i + 1 < d.p.size(); ++i)
        acc += 0.5 * (d.x[i] * d.p[i] + d.x[i + 1] * d.p[i + 1]) * (d.x[i + 1] - d.x[i]);
    return acc / trapezoid_mass(d);
}

}  // namespace upsr
