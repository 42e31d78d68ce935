#include "qfim.hpp"

#include <cmath>
#include <limits>

#include "error.hpp"

namespace qsr {

void SceneParams::validate(bool strict_epsilon) const {
    require(std::isfinite(x_bar) && std::isfinite(y_bar) && std::isfinite(alpha),
            ErrorCode::validation, "scene parameters must be finite");
    require(r >= 0.0 && std::isfinite(r), ErrorCode::validation, "separation r must be >= 0");
    require(std::abs(epsilon) <= 1.0, ErrorCode::validation, "|epsilon| must be <= 1");
    if (strict_epsilon)
        require(std::abs(epsilon) < 1.0, ErrorCode::validation,
                "|epsilon| = 1 leaves one source dark; precision operations are undefined");
    require(n_total > 0.0, ErrorCode::validation, "n_total must be positive");
}

Eigen::Vector2d SceneParams::source1() const {
    return {x_bar - 0.5 * r * std::cos(alpha), y_bar - 0.5 * r * std::sin(alpha)};
}

Eigen::Vector2d SceneParams::source2() const {
    return {x_bar + 0.5 * r * std::cos(alpha), y_bar + 0.5 * r * std::sin(alpha)};
}

EigenSystem eigensystem(double delta, double epsilon) {
    require(std::abs(delta) <= 1.0 + 1e-12, ErrorCode::validation, "|delta| must be <= 1");
    require(std::abs(epsilon) <= 1.0, ErrorCode::validation, "|epsilon| must be <= 1");
    EigenSystem out;
    double s = std::sqrt(epsilon * epsilon + delta * delta * (1.0 - epsilon * epsilon));
    out.lambda1 = 0.5 * (1.0 - s);
    out.lambda2 = 0.5 * (1.0 + s);
    out.eigenstates_defined =
        delta != 0.0 && std::abs(delta) < 1.0 && std::abs(epsilon) < 1.0;
    if (out.eigenstates_defined) {
        double d2 = delta * delta;
        double root = std::sqrt(d2 + epsilon * epsilon - d2 * epsilon * epsilon);
        double common = d2 * (1.0 - d2) * (1.0 - epsilon) * (1.0 - epsilon);
        double den1 = root + d2 * (1.0 - epsilon) + epsilon;
        double den2 = root - d2 * (1.0 - epsilon) - epsilon;
        out.qnorm1 = (1.0 - d2) * (1.0 + common / (den1 * den1));
        out.qnorm2 = (1.0 - d2) * (1.0 + common / (den2 * den2));
    }
    return out;
}

FisherMatrix build_qfim(const BaseMoments& base, const GeometryMoments& geom, double epsilon) {
    double kx = base.kappa_x, ky = base.kappa_y, eta = base.eta;
    double gx = geom.gamma_x, gy = geom.gamma_y;
    double r = geom.r, a = geom.alpha;
    double c = std::cos(a), s = std::sin(a);
    double c2 = std::cos(2.0 * a), s2 = std::sin(2.0 * a);
    double e = epsilon, one_e2 = 1.0 - epsilon * epsilon;

    FisherMatrix f;
    f.kind = FisherMatrix::Kind::quantum;
    Eigen::Matrix4d& q = f.m;
    q(0, 0) = 4.0 * kx - 4.0 * one_e2 * gx * gx;
    q(0, 1) = q(1, 0) = 4.0 * eta - 4.0 * one_e2 * gx * gy;
    q(0, 2) = q(2, 0) = 2.0 * e * (eta * s + c * kx);
    q(0, 3) = q(3, 0) = 2.0 * r * e * (eta * c - s * kx);
    q(1, 1) = 4.0 * ky - 4.0 * one_e2 * gy * gy;
    q(1, 2) = q(2, 1) = 2.0 * e * (eta * c + s * ky);
    q(1, 3) = q(3, 1) = 2.0 * r * e * (c * ky - eta * s);
    q(2, 2) = geom.kappa_r;
    q(2, 3) = q(3, 2) = 0.5 * r * (2.0 * eta * c2 - s2 * kx + s2 * ky);
    q(3, 3) = r * r * geom.kappa_r_perp;
    return f;
}

DiagInverse invert_diag(const Eigen::Matrix4d& m, int k) {
    DiagInverse out;
    Eigen::Vector4d d;
    for (int i = 0; i < 4; ++i) {
        require(m(i, i) > 0.0, ErrorCode::validation,
                "Fisher matrix has a non-positive diagonal entry; inverse undefined");
        d(i) = 1.0 / std::sqrt(m(i, i));
    }
    Eigen::Matrix4d kmat = d.asDiagonal() * m * d.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(kmat);
    require(es.info() == Eigen::Success, ErrorCode::nonconvergence,
            "eigen-decomposition of Fisher matrix failed");
    double lmin = es.eigenvalues().minCoeff();
    require(lmin > 1e-14, ErrorCode::validation, "Fisher matrix is numerically singular");

    double acc = 0.0;
    for (int j = 0; j < 4; ++j) {
        double u = es.eigenvectors()(k, j);
        acc += u * u / es.eigenvalues()(j);
    }
    out.value = d(k) * d(k) * acc;

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> raw(m);
    double rmin = std::abs(raw.eigenvalues().minCoeff());
    double rmax = std::abs(raw.eigenvalues().maxCoeff());
    out.cond = rmin > 0.0 ? rmax / rmin : std::numeric_limits<double>::infinity();
    out.cond_warning = out.cond > 1e12;
    return out;
}

namespace {

// shared bracket of Eq. (hr)/(halpha) numerators
double bracket(const BaseMoments& b, const GeometryMoments& g) {
    return b.det() + 2.0 * b.eta * g.gamma_x * g.gamma_y - b.kappa_x * g.gamma_y * g.gamma_y -
           g.gamma_x * g.gamma_x * b.kappa_y;
}

}  // namespace

PrecisionR precision_r(const BaseMoments& base, const GeometryMoments& geom, double epsilon,
                       double n_total) {
    require(std::abs(epsilon) < 1.0, ErrorCode::validation,
            "|epsilon| = 1 leaves one source dark; H_r is degenerate");
    require(n_total > 0.0, ErrorCode::validation, "n_total must be positive");

    double kx = base.kappa_x, ky = base.kappa_y, eta = base.eta;
    double gx = geom.gamma_x, gy = geom.gamma_y;
    double c = std::cos(geom.alpha), s = std::sin(geom.alpha);
    double s2 = std::sin(2.0 * geom.alpha);
    double e2 = epsilon * epsilon, one_e2 = 1.0 - e2;
    double det = base.det();
    double krp = geom.kappa_r_perp;

    double num = n_total * one_e2 * det * bracket(base, geom);
    double t1 = eta * s - ky * c;
    double t2 = eta * c - kx * s;
    double den = det * krp + gx * gx * (e2 * t1 * t1 - krp * ky) +
                 gx * gy * (e2 * det * s2 + 2.0 * eta * krp * one_e2) +
                 gy * gy * (e2 * t2 * t2 - krp * kx);

    PrecisionR out;
    out.value = num / den;
    out.at_r_zero = geom.r == 0.0;
    if (!out.at_r_zero) {
        FisherMatrix q = build_qfim(base, geom, epsilon);
        DiagInverse inv = invert_diag(q.m, 2);
        out.value_inverse = n_total / inv.value;
        out.inverse_defined = true;
        out.cond = inv.cond;
        out.cond_warning = inv.cond_warning;
    }
    return out;
}

double precision_r_limit(const BaseMoments& base, double alpha, double epsilon, double n_total) {
    require(std::abs(epsilon) < 1.0, ErrorCode::validation,
            "|epsilon| = 1 leaves one source dark; H_r is degenerate");
    double s = std::sin(alpha), c = std::cos(alpha);
    double krp = base.kappa_x * s * s + base.kappa_y * c * c - base.eta * std::sin(2.0 * alpha);
    require(krp > 0.0, ErrorCode::validation, "kappa_r_perp must be positive");
    return n_total * (1.0 - epsilon * epsilon) * base.det() / krp;
}

PrecisionAlpha precision_alpha(const BaseMoments& base, const GeometryMoments& geom,
                               double epsilon, double n_total) {
    require(std::abs(epsilon) < 1.0, ErrorCode::validation,
            "|epsilon| = 1 leaves one source dark; H_alpha is degenerate");
    require(n_total > 0.0, ErrorCode::validation, "n_total must be positive");

    PrecisionAlpha out;
    if (geom.r == 0.0) {
        out.value = 0.0;
        out.degenerate = true;  // azimuth is meaningless for coincident sources
        return out;
    }
    double kx = base.kappa_x, ky = base.kappa_y, eta = base.eta;
    double gx = geom.gamma_x, gy = geom.gamma_y;
    double c = std::cos(geom.alpha), s = std::sin(geom.alpha);
    double e2 = epsilon * epsilon;
    double br = bracket(base, geom);

    double num = geom.r * geom.r * n_total * (1.0 - e2) * base.det() * br;
    double cross = gy * (eta * s + c * kx) - gx * (eta * c + s * ky);
    double den = e2 * cross * cross + geom.kappa_r * br;
    out.value = num / den;

    FisherMatrix q = build_qfim(base, geom, epsilon);
    DiagInverse inv = invert_diag(q.m, 3);
    out.value_inverse = n_total / inv.value;
    out.inverse_defined = true;
    out.cond = inv.cond;
    out.cond_warning = inv.cond_warning;
    return out;
}

double precision_alpha_smallr(const BaseMoments& base, double r, double alpha, double epsilon,
                              double n_total) {
    double s = std::sin(alpha), c = std::cos(alpha);
    double kr = base.kappa_x * c * c + base.kappa_y * s * s + base.eta * std::sin(2.0 * alpha);
    return r * r * n_total * (1.0 - epsilon * epsilon) * base.det() / kr;
}

}  // namespace qsr
