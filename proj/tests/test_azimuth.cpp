#include <doctest.h>

#include <cmath>

#include "azimuth.hpp"
#include "qfim.hpp"
#include "rng.hpp"

using namespace qsr;

namespace {
constexpr double kPi = 3.141592653589793238462643383279;

double angle_dist_mod_pi(double a, double b) {
    double d = std::abs(wrap_half_turn(a) - wrap_half_turn(b));
    return std::min(d, kPi - d);
}
}  // namespace

TEST_CASE("reflection-symmetric case picks the larger moment axis") {
    // eta = 0, kappa_x > kappa_y  <->  sigma1 < sigma2
    BaseMoments b = base_moments(make_gaussian(1.0, 1.4, 0.0));
    AzimuthExtrema e = optimal_azimuth(b, 0.3, 2.0);
    CHECK(e.alpha_opt == 0.0);
    CHECK(e.alpha_wor == doctest::Approx(0.5 * kPi).epsilon(1e-15));
    CHECK(e.h_opt == doctest::Approx(2.0 * (1.0 - 0.09) * b.kappa_x).epsilon(1e-12));
    CHECK(e.h_wor == doctest::Approx(2.0 * (1.0 - 0.09) * b.kappa_y).epsilon(1e-12));
}

TEST_CASE("fig3 PSF reference extrema") {
    BaseMoments b = base_moments(make_gaussian(1.0, 1.4, 0.4));
    AzimuthExtrema e = optimal_azimuth(b, 0.0, 1.0);
    CHECK(angle_dist_mod_pi(e.alpha_opt, -0.43108502733361337) < 1e-12);
    CHECK(e.h_opt == doctest::Approx(0.33672916007401471).epsilon(1e-12));
    CHECK(e.h_wor == doctest::Approx(0.112736340411894).epsilon(1e-12));
    CHECK(e.xi == doctest::Approx(2.986873255276334).epsilon(1e-12));
    CHECK(angle_dist_mod_pi(e.alpha_opt - e.alpha_wor, 0.5 * kPi) < 1e-12);
}

TEST_CASE("circular PSF is degenerate") {
    BaseMoments b = base_moments(make_gaussian(1.0, 1.0, 0.0));
    AzimuthExtrema e = optimal_azimuth(b, 0.2, 1.0);
    CHECK(e.degenerate);
    CHECK(e.xi == 1.0);
    CHECK(e.h_opt == doctest::Approx(e.h_wor).epsilon(1e-15));
}

TEST_CASE("gaussian principal axes") {
    SUBCASE("beta = 0 limit of the axis formula") {
        GaussianAxes ax = gaussian_axes(GaussianPsf{1.0, 1.4, 0.0});
        CHECK(ax.defined);
        CHECK(ax.phi_plus == doctest::Approx(0.5 * kPi));  // major axis along y
        CHECK(ax.phi_minus == doctest::Approx(0.0));
        GaussianAxes ax2 = gaussian_axes(GaussianPsf{1.4, 1.0, 0.0});
        CHECK(ax2.phi_plus == doctest::Approx(0.0));
        CHECK(ax2.phi_minus == doctest::Approx(0.5 * kPi));
    }
    SUBCASE("isotropic axes are undefined") {
        CHECK_FALSE(gaussian_axes(GaussianPsf{1.0, 1.0, 0.0}).defined);
    }
    SUBCASE("alpha_opt coincides with the minor axis") {
        GaussianPsf g{1.0, 1.4, 0.4};
        GaussianAxes ax = gaussian_axes(g);
        BaseMoments b = base_moments(make_gaussian(g.sigma1, g.sigma2, g.beta));
        AzimuthExtrema e = optimal_azimuth(b, 0.0, 1.0);
        CHECK(angle_dist_mod_pi(e.alpha_opt, ax.phi_minus) < 1e-10);
        CHECK(angle_dist_mod_pi(e.alpha_wor, ax.phi_plus) < 1e-10);
    }
    SUBCASE("axes agree with the 2x2 eigen-decomposition of Sigma") {
        Rng rng(7, 0);
        for (int k = 0; k < 50; ++k) {
            GaussianPsf g{0.7 + rng.next_double(), 0.7 + rng.next_double(),
                          -0.8 + 1.6 * rng.next_double()};
            if (std::abs(g.sigma1 - g.sigma2) < 0.02 && std::abs(g.beta) < 0.02) continue;
            GaussianAxes ax = gaussian_axes(g);
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(
                make_gaussian(g.sigma1, g.sigma2, g.beta).gaussian().sigma_matrix());
            double minor = std::atan2(es.eigenvectors()(1, 0), es.eigenvectors()(0, 0));
            double major = std::atan2(es.eigenvectors()(1, 1), es.eigenvectors()(0, 1));
            CHECK(angle_dist_mod_pi(ax.phi_minus, minor) < 1e-10);
            CHECK(angle_dist_mod_pi(ax.phi_plus, major) < 1e-10);
        }
    }
}

TEST_CASE("enhancement ratio") {
    SUBCASE("beta = 0: ratio of squared widths") {
        BaseMoments b = base_moments(make_gaussian(1.0, 1.4, 0.0));
        CHECK(enhancement_ratio(b) == doctest::Approx(1.96).epsilon(1e-12));
    }
    SUBCASE("fig3 reference value") {
        BaseMoments b = base_moments(make_gaussian(1.0, 1.4, 0.4));
        CHECK(enhancement_ratio(b) == doctest::Approx(2.986873255276334).epsilon(1e-12));
    }
    SUBCASE("circular: no enhancement") {
        BaseMoments b = base_moments(make_gaussian(1.2, 1.2, 0.0));
        CHECK(enhancement_ratio(b) == doctest::Approx(1.0).epsilon(1e-14));
    }
    SUBCASE("equals h_opt / h_wor") {
        BaseMoments b = base_moments(make_gaussian(0.9, 1.6, -0.3));
        AzimuthExtrema e = optimal_azimuth(b, 0.3, 5.0);
        CHECK(enhancement_ratio(b) == doctest::Approx(e.h_opt / e.h_wor).epsilon(1e-12));
    }
}

TEST_CASE("alpha scan") {
    BaseMoments b = base_moments(make_gaussian(1.0, 1.4, 0.4));
    const int n = 720;
    auto curve = scan_alpha(b, 0.2, 1.0, n);
    REQUIRE(curve.size() == n);

    SUBCASE("argmax within one grid step of the closed form") {
        AzimuthExtrema e = optimal_azimuth(b, 0.2, 1.0);
        std::size_t arg = 0;
        for (std::size_t i = 1; i < curve.size(); ++i)
            if (curve[i].h_r_limit > curve[arg].h_r_limit) arg = i;
        CHECK(angle_dist_mod_pi(curve[arg].alpha, e.alpha_opt) <= kPi / n + 1e-12);
    }
    SUBCASE("pi-periodic endpoints") {
        double at_pi = precision_r_limit(b, kPi, 0.2, 1.0);
        CHECK(curve.front().h_r_limit == doctest::Approx(at_pi).epsilon(1e-12));
    }
    SUBCASE("eps sweep at fixed alpha peaks at zero imbalance") {
        double h0 = precision_r_limit(b, 0.9, 0.0, 1.0);
        for (double e : {-0.6, -0.2, 0.3, 0.8}) CHECK(precision_r_limit(b, 0.9, e, 1.0) < h0);
    }
    SUBCASE("too few points rejected") { CHECK_THROWS_AS(scan_alpha(b, 0.0, 1.0, 4), Error); }
}

TEST_CASE("stationarity of the extrema") {
    Rng rng(11, 0);
    for (int k = 0; k < 50; ++k) {
        double s1 = 0.7 + 1.1 * rng.next_double();
        double s2 = 0.7 + 1.1 * rng.next_double();
        double beta = -0.7 + 1.4 * rng.next_double();
        BaseMoments b = base_moments(make_gaussian(s1, s2, beta));
        AzimuthExtrema e = optimal_azimuth(b, 0.0, 1.0);
        if (e.degenerate) continue;
        double h = 1e-6;
        for (double a : {e.alpha_opt, e.alpha_wor}) {
            double d = (precision_r_limit(b, a + h, 0.0, 1.0) -
                        precision_r_limit(b, a - h, 0.0, 1.0)) /
                       (2.0 * h);
            CHECK(std::abs(d) < 1e-6);
        }
        // the closed-form optimum dominates a fine grid scan
        auto curve = scan_alpha(b, 0.0, 1.0, 512);
        double grid_max = 0.0;
        for (const auto& p : curve) grid_max = std::max(grid_max, p.h_r_limit);
        CHECK(e.h_opt >= grid_max - 1e-12);
    }
}
