#include "moments.hpp"

#include <cmath>
#include <string>

namespace qsr {

namespace {
constexpr double kRefineTol = 1e-6;

double grid_moment(const Grid2d& a, const Grid2d& b, int threads) {
    return a.integrate_cells([&](int ix, int iy) { return a.at(ix, iy) * b.at(ix, iy); }, threads);
}

double grid_moment_coarse(const Grid2d& a, const Grid2d& b) {
    return a.integrate_cells_coarse([&](int ix, int iy) { return a.at(ix, iy) * b.at(ix, iy); });
}
}  // namespace

BaseMoments base_moments(const Psf& psf, int threads) {
    BaseMoments out;
    if (psf.is_gaussian()) {
        Eigen::Matrix2d p = psf.gaussian().precision_matrix();
        out.kappa_x = 0.25 * p(0, 0);
        out.kappa_y = 0.25 * p(1, 1);
        out.eta = 0.25 * p(0, 1);
    } else {
        const GridPsf& g = psf.grid();
        out.kappa_x = grid_moment(g.psi_x, g.psi_x, threads);
        out.kappa_y = grid_moment(g.psi_y, g.psi_y, threads);
        out.eta = grid_moment(g.psi_x, g.psi_y, threads);
        // refinement convergence, on the common moment-matrix scale
        double scale = out.kappa_x + out.kappa_y;
        const char* names[3] = {"kappa_x", "kappa_y", "eta"};
        double fine[3] = {out.kappa_x, out.kappa_y, out.eta};
        double coarse[3] = {grid_moment_coarse(g.psi_x, g.psi_x),
                            grid_moment_coarse(g.psi_y, g.psi_y),
                            grid_moment_coarse(g.psi_x, g.psi_y)};
        for (int k = 0; k < 3; ++k) {
            require(std::abs(fine[k] - coarse[k]) <= kRefineTol * scale,
                    ErrorCode::nonconvergence,
                    std::string("grid moment quadrature did not converge under refinement: ") +
                        names[k]);
        }
    }
    require(out.kappa_x > 0.0 && out.kappa_y > 0.0, ErrorCode::validation,
            "momentum second moments must be positive");
    require(out.det() >= -1e-12 * out.kappa_x * out.kappa_y, ErrorCode::validation,
            "moment matrix violates Cauchy-Schwarz");
    return out;
}

GeometryMoments geometry_moments(const Psf& psf, double r, double alpha, const BaseMoments& base,
                                 int threads) {
    require(r >= 0.0 && std::isfinite(r), ErrorCode::validation, "separation r must be >= 0");
    require(std::isfinite(alpha), ErrorCode::validation, "azimuth must be finite");

    GeometryMoments out;
    out.r = r;
    out.alpha = alpha;
    double c = std::cos(alpha), s = std::sin(alpha);
    double s2 = std::sin(2.0 * alpha);
    out.kappa_r = base.kappa_x * c * c + base.kappa_y * s * s + base.eta * s2;
    out.kappa_r_perp = base.kappa_x * s * s + base.kappa_y * c * c - base.eta * s2;

    if (r == 0.0) {
        out.delta = 1.0;
        out.gamma_x = 0.0;
        out.gamma_y = 0.0;
        return out;
    }
    double dx = r * c, dy = r * s;
    out.delta = psf.overlap(dx, dy, threads);
    out.gamma_x = psf.overlap_d1(dx, dy, 0, threads);
    out.gamma_y = psf.overlap_d1(dx, dy, 1, threads);
    return out;
}

}  // namespace qsr
