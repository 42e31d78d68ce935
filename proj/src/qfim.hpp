#pragma once

#include <Eigen/Dense>

#include "moments.hpp"

namespace qsr {

// Unknown parameter vector (X_bar, Y_bar, r, alpha) plus the fixed scene
// description: intensity imbalance epsilon and photon budget n_total.
struct SceneParams {
    double x_bar = 0.0;
    double y_bar = 0.0;
    double r = 0.0;
    double alpha = 0.0;
    double epsilon = 0.0;
    double n_total = 1.0;

    // strict=true rejects |epsilon| == 1 (one dark source), required for
    // precision operations; sampling/pdf paths accept it.
    void validate(bool strict_epsilon) const;
    Eigen::Vector2d source1() const;
    Eigen::Vector2d source2() const;
};

struct FisherMatrix {
    enum class Kind { quantum, classical };
    Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
    Kind kind = Kind::quantum;
};

// Eigen-decomposition of the two-source density operator on its support.
struct EigenSystem {
    double lambda1 = 0.0;  // smaller eigenvalue
    double lambda2 = 1.0;
    double qnorm1 = 0.0;  // eigenstate normalization constants
    double qnorm2 = 0.0;
    bool eigenstates_defined = false;  // false when delta == 0 (or |delta| == 1)
};

EigenSystem eigensystem(double delta, double epsilon);

FisherMatrix build_qfim(const BaseMoments& base, const GeometryMoments& geom, double epsilon);

// (M^-1)_kk via diagonally equilibrated eigen-solve, with the condition
// number of the raw matrix reported. Scans near r = 0 warn past 1e12.
struct DiagInverse {
    double value = 0.0;
    double cond = 0.0;
    bool cond_warning = false;
};
DiagInverse invert_diag(const Eigen::Matrix4d& m, int k);

// Distance precision H_r = N/(Q^-1)_33. `value` comes from the explicit
// numerator/denominator ratio, which stays finite at r = 0 where the full
// 4-parameter inverse does not exist; `value_inverse` carries the
// matrix-inversion route whenever r > 0.
struct PrecisionR {
    double value = 0.0;
    double value_inverse = 0.0;
    bool inverse_defined = false;
    bool at_r_zero = false;
    double cond = 0.0;
    bool cond_warning = false;
};
PrecisionR precision_r(const BaseMoments& base, const GeometryMoments& geom, double epsilon,
                       double n_total);

// r -> 0 limit of H_r.
double precision_r_limit(const BaseMoments& base, double alpha, double epsilon, double n_total);

// Azimuth precision H_alpha = N/(Q^-1)_44; zero (flagged) at r = 0 where the
// azimuth is meaningless.
struct PrecisionAlpha {
    double value = 0.0;
    double value_inverse = 0.0;
    bool inverse_defined = false;
    bool degenerate = false;
    double cond = 0.0;
    bool cond_warning = false;
};
PrecisionAlpha precision_alpha(const BaseMoments& base, const GeometryMoments& geom,
                               double epsilon, double n_total);

// Leading small-r term of H_alpha: r^2 N (1-eps^2)(kx ky - eta^2)/kappa_r.
// The (1-eps^2) factor is the numerically resolved leading coefficient.
double precision_alpha_smallr(const BaseMoments& base, double r, double alpha, double epsilon,
                              double n_total);

}  // namespace qsr
