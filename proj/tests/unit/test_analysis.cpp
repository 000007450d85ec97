#include <doctest.h>

#include <cmath>

#include "upsr/analysis.hpp"
#include "upsr/synth.hpp"

using namespace upsr;

#define CHECK_NEAR(a, b, tol) CHECK(std::abs((a) - (b)) <= (tol))

TEST_CASE("psnr anchors and symmetry") {
    Rng rng(51);
    const Image a = random_image(16, 16, 3, rng);
    CHECK(psnr(a, a) == kPsnrCap);

    Image b = a;
    for (auto& v : b.data) v += 0.1f;  // MSE = 0.01 -> 20 dB
    CHECK_NEAR(psnr(a, b), 20.0, 1e-4);
    CHECK(psnr(a, b) == psnr(b, a));

    Image c = Image::constant(8, 8, 1, 0.0f);
    Image d = Image::constant(8, 8, 1, 1.0f);  // MSE = 1 -> 0 dB
    CHECK_NEAR(psnr(c, d), 0.0, 1e-9);

    Image e(4, 4, 1);
    CHECK_THROWS_AS(psnr(a, e), ShapeError);
}

TEST_CASE("ssim anchors") {
    Rng rng(52);
    const Image a = random_image(16, 16, 3, rng);
    CHECK_NEAR(ssim(a, a), 1.0, 1e-9);

    // inverted binary image: covariance is negative everywhere
    Image bin(16, 16, 1);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) bin.at(y, x, 0) = (x + y) % 2 == 0 ? 1.0f : 0.0f;
    Image inv = bin;
    for (auto& v : inv.data) v = 1.0f - v;
    CHECK(ssim(bin, inv) < 0.0);

    // constants: variance terms vanish, only the luminance factor remains
    const double c1 = 0.45, c2 = 0.55;
    const Image f1 = Image::constant(16, 16, 1, static_cast<float>(c1));
    const Image f2 = Image::constant(16, 16, 1, static_cast<float>(c2));
    const double expected = (2.0 * c1 * c2 + 0.0001) / (c1 * c1 + c2 * c2 + 0.0001);
    CHECK_NEAR(ssim(f1, f2), expected, 1e-6);
    CHECK(ssim(f1, f2) > 0.0);
    CHECK(ssim(f1, f2) < 1.0);

    Image small(8, 8, 1);
    CHECK_THROWS_AS(ssim(small, small), ShapeError);
}

TEST_CASE("residual_histogram bins |y0 - x0|") {
    Rng rng(53);
    const Image x0 = random_image(16, 16, 3, rng);

    // identical pair: all mass in bin 0
    Histogram h0 = residual_histogram({{x0, x0}});
    CHECK(h0.counts[0] == static_cast<int64_t>(x0.data.size()));
    CHECK(h0.overflow == 0);
    CHECK(h0.total == static_cast<int64_t>(x0.data.size()));

    // uniform offset 0.05 lands in the bin containing 0.05
    Image y = x0;
    for (auto& v : y.data) v += 0.05f;
    Histogram h1 = residual_histogram({{y, x0}});
    CHECK(h1.counts[5] == static_cast<int64_t>(x0.data.size()));

    // invariant: counts + overflow = total
    Image far = x0;
    for (auto& v : far.data) v += 0.5f;
    Histogram h2 = residual_histogram({{far, x0}, {y, x0}});
    int64_t sum = h2.overflow;
    for (int64_t c : h2.counts) sum += c;
    CHECK(sum == h2.total);
    CHECK(h2.overflow == static_cast<int64_t>(far.data.size()));
}

TEST_CASE("mc_moment_check verdicts") {
    // deterministic source with matching mean: passes, empirical std 0
    const MomentReport fixed = mc_moment_check([] { return 0.25; }, 0.25, 0.0, 2000);
    CHECK(fixed.pass());
    CHECK(fixed.emp_std == 0.0);

    // standard normal vs correct targets
    Rng rng(54);
    const MomentReport normal = mc_moment_check([&] { return rng.normal(); }, 0.0, 1.0, 1000000);
    CHECK(normal.pass());

    // wrong target mean fails on the mean
    Rng rng2(55);
    const MomentReport wrong = mc_moment_check([&] { return rng2.normal(); }, 0.5, 1.0, 1000000);
    CHECK_FALSE(wrong.mean_pass);
    CHECK_FALSE(wrong.pass());

    CHECK_THROWS_AS(mc_moment_check([] { return 0.0; }, 0.0, 1.0, 10), ParamError);
    CHECK_THROWS_AS(
        mc_moment_check([] { return std::numeric_limits<double>::quiet_NaN(); }, 0.0, 1.0, 2000),
        Error);
}

TEST_CASE("bayes_grid_posterior matches the closed-form reverse transition") {
    const NoiseSchedule s = NoiseSchedule::from_etas(2.0, {0.2, 0.6});
    const double x_t = 1.0, x0 = 0.0, y0 = 0.7, w = 1.0;
    const GridDensity grid = bayes_grid_posterior(x_t, x0, y0, s, w, 2);

    CHECK_NEAR(trapezoid_mass(grid), 1.0, 1e-6);
    CHECK_FALSE(grid.coarse);

    double mu, sd;
    reverse_moments(x_t, x0, s, w, 2, &mu, &sd);
    CHECK_NEAR(mu, 1.0 / 3.0, 1e-12);
    CHECK_NEAR(sd, 2.0 * std::sqrt(0.2 / 0.6 * 0.4), 1e-12);
    CHECK_NEAR(grid_mean(grid), mu, 1e-6);

    const std::vector<double> closed = reverse_density_closed_form(grid.x, x_t, x0, s, w, 2);
    CHECK(tv_distance(grid, closed) < 1e-3);
    CHECK(tv_distance(grid, closed) < 1e-8);  // quadrature-only error in practice
}

TEST_CASE("bayes_grid_posterior on a fixed range concentrates as w shrinks") {
    const NoiseSchedule s = NoiseSchedule::from_etas(2.0, {0.2, 0.6});
    double mu, sd;
    reverse_moments(1.0, 0.0, s, 1e-3, 2, &mu, &sd);
    const GridDensity d = bayes_grid_posterior_range(1.0, 0.0, 0.7, s, 1e-3, 2, mu - 0.5, mu + 0.5, 8192);
    // nearly all trapezoid mass sits in a couple of cells around the mean
    double maxmass = 0.0;
    for (size_t i = 0; i + 1 < d.p.size(); ++i)
        maxmass = std::max(maxmass, 0.5 * (d.p[i] + d.p[i + 1]) * (d.x[i + 1] - d.x[i]));
    double near = 0.0;
    for (size_t i = 0; i + 1 < d.p.size(); ++i)
        if (std::abs(d.x[i] - mu) < 10 * sd) near += 0.5 * (d.p[i] + d.p[i + 1]) * (d.x[i + 1] - d.x[i]);
    CHECK(near > 0.999);
    CHECK(maxmass > 0.01);
}

TEST_CASE("bayes_grid_posterior rejects the deterministic step and zero noise") {
    const NoiseSchedule s = NoiseSchedule::from_etas(2.0, {0.2, 0.6});
    CHECK_THROWS_AS(bayes_grid_posterior(1.0, 0.0, 0.7, s, 1.0, 1), ParamError);
    CHECK_THROWS_AS(bayes_grid_posterior(1.0, 0.0, 0.7, s, 0.0, 2), ParamError);
}

TEST_CASE("analysis serial references match parallel kernels") {
    Rng rng(56);
    const Image a = random_image(32, 48, 3, rng);
    const Image b = random_image(32, 48, 3, rng);
    CHECK(psnr(a, b) == serial::psnr(a, b));
    CHECK(ssim(a, b) == serial::ssim(a, b));
}
