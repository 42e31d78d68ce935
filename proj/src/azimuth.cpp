#include "azimuth.hpp"

#include <cmath>

#include "error.hpp"
#include "qfim.hpp"

namespace qsr {

namespace {
constexpr double kPi = 3.141592653589793238462643383279;
constexpr double kIsotropicTol = 1e-14;
}  // namespace

double wrap_half_turn(double angle) {
    double a = std::fmod(angle, kPi);
    if (a < 0.0) a += kPi;
    return a;
}

AzimuthExtrema optimal_azimuth(const BaseMoments& base, double epsilon, double n_total) {
    require(base.kappa_x > 0.0 && base.kappa_y > 0.0, ErrorCode::validation,
            "moments must be positive");
    require(std::abs(epsilon) < 1.0, ErrorCode::validation, "|epsilon| must be < 1");
    double kx = base.kappa_x, ky = base.kappa_y, eta = base.eta;
    double diff = ky - kx;
    double disc = std::sqrt(4.0 * eta * eta + diff * diff);
    double scale = kx + ky;

    AzimuthExtrema out;
    double pref = 0.5 * n_total * (1.0 - epsilon * epsilon);
    out.h_opt = pref * (scale + disc);
    out.h_wor = pref * (scale - disc);
    out.xi = (scale + disc) / (scale - disc);

    if (disc <= kIsotropicTol * scale) {
        // circular symmetry: every azimuth is equivalent
        out.degenerate = true;
        out.alpha_opt = 0.0;
        out.alpha_wor = wrap_half_turn(0.5 * kPi);
        out.h_opt = out.h_wor = pref * scale;
        out.xi = 1.0;
        return out;
    }

    if (std::abs(eta) <= kIsotropicTol * scale) {
        // reflection-symmetric PSF
        out.alpha_opt = kx > ky ? 0.0 : 0.5 * kPi;
        out.alpha_wor = wrap_half_turn(out.alpha_opt + 0.5 * kPi);
    } else {
        out.alpha_opt = wrap_half_turn(std::atan((diff + disc) / (2.0 * eta)));
        out.alpha_wor = wrap_half_turn(std::atan((diff - disc) / (2.0 * eta)));
        // The paper's tan^-1 is branch-ambiguous; confirm by the second-order
        // behaviour of Eq. (hds) and swap if the branches came out reversed.
        double h_at_opt = precision_r_limit(base, out.alpha_opt, epsilon, n_total);
        double h_at_wor = precision_r_limit(base, out.alpha_wor, epsilon, n_total);
        if (h_at_opt < h_at_wor) std::swap(out.alpha_opt, out.alpha_wor);
    }
    return out;
}

GaussianAxes gaussian_axes(const GaussianPsf& psf) {
    double s1 = psf.sigma1, s2 = psf.sigma2, b = psf.beta;
    double diff = s2 * s2 - s1 * s1;
    double root = std::sqrt(diff * diff + 4.0 * b * b * s1 * s1 * s2 * s2);

    GaussianAxes out;
    if (root <= kIsotropicTol * (s1 * s1 + s2 * s2)) {
        out.defined = false;  // isotropic: axes undefined
        return out;
    }
    if (b == 0.0) {
        // limit of Eq. (axis): the major axis lies along the larger width
        out.phi_plus = s2 > s1 ? 0.5 * kPi : 0.0;
        out.phi_minus = wrap_half_turn(out.phi_plus + 0.5 * kPi);
        return out;
    }
    out.phi_plus = wrap_half_turn(std::atan((diff + root) / (2.0 * b * s1 * s2)));
    out.phi_minus = wrap_half_turn(std::atan((diff - root) / (2.0 * b * s1 * s2)));
    return out;
}

double enhancement_ratio(const BaseMoments& base) {
    double diff = base.kappa_y - base.kappa_x;
    double disc = std::sqrt(4.0 * base.eta * base.eta + diff * diff);
    double scale = base.kappa_x + base.kappa_y;
    require(scale > disc, ErrorCode::validation, "degenerate moment matrix");
    return (scale + disc) / (scale - disc);
}

std::vector<AlphaSample> scan_alpha(const BaseMoments& base, double epsilon, double n_total,
                                    int n_points) {
    require(n_points >= 8, ErrorCode::validation, "alpha scan needs at least 8 points");
    std::vector<AlphaSample> out;
    out.reserve(n_points);
    for (int i = 0; i < n_points; ++i) {
        double a = kPi * i / n_points;
        out.push_back({a, precision_r_limit(base, a, epsilon, n_total)});
    }
    return out;
}

}  // namespace qsr
