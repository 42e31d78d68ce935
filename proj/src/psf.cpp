#include "psf.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace qsr {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kSymmetryTol = 1e-8;
constexpr double kBoundaryDecay = 1e-6;
constexpr double kNormDriftTol = 1e-6;
}  // namespace

double GaussianPsf::amplitude(double x, double y) const {
    Eigen::Matrix2d p = precision_matrix();
    double q = p(0, 0) * x * x + 2.0 * p(0, 1) * x * y + p(1, 1) * y * y;
    return std::exp(-0.25 * q) / (std::sqrt(kTwoPi) * std::pow(det_sigma(), 0.25));
}

double Psf::amplitude(double x, double y) const {
    if (is_gaussian()) return gaussian().amplitude(x, y);
    return grid().amplitude(x, y);
}

double Psf::length_scale() const {
    if (is_gaussian()) return std::max(gaussian().sigma1, gaussian().sigma2);
    return std::max(grid().psi.hx(), grid().psi.hy()) / 8.0;
}

namespace {

void check_grid_shift(const GridPsf& g, double dx, double dy) {
    require(std::abs(dx) <= g.psi.hx() && std::abs(dy) <= g.psi.hy(), ErrorCode::validation,
            "shift exceeds grid PSF domain support");
}

double grid_shifted_product(const Grid2d& left, const Grid2d& shifted, double dx, double dy,
                            int threads) {
    return left.integrate_cells(
        [&](int ix, int iy) {
            double v = left.at(ix, iy);
            if (v == 0.0) return 0.0;
            return v * shifted.interp(left.x(ix) - dx, left.y(iy) - dy);
        },
        threads);
}

}  // namespace

double Psf::overlap(double dx, double dy, int threads) const {
    if (is_gaussian()) {
        Eigen::Matrix2d p = gaussian().precision_matrix();
        double q = p(0, 0) * dx * dx + 2.0 * p(0, 1) * dx * dy + p(1, 1) * dy * dy;
        return std::exp(-q / 8.0);
    }
    const GridPsf& g = grid();
    check_grid_shift(g, dx, dy);
    return grid_shifted_product(g.psi, g.psi, dx, dy, threads);
}

double Psf::overlap_d1(double dx, double dy, int axis, int threads) const {
    if (is_gaussian()) {
        Eigen::Matrix2d p = gaussian().precision_matrix();
        Eigen::Vector2d d(dx, dy);
        Eigen::Vector2d pd = p * d;
        return 0.25 * pd(axis) * overlap(dx, dy);
    }
    const GridPsf& g = grid();
    check_grid_shift(g, dx, dy);
    return grid_shifted_product(g.psi, axis == 0 ? g.psi_x : g.psi_y, dx, dy, threads);
}

double Psf::overlap_d2(double dx, double dy, int axis_a, int axis_b, int threads) const {
    if (is_gaussian()) {
        Eigen::Matrix2d p = gaussian().precision_matrix();
        Eigen::Vector2d d(dx, dy);
        Eigen::Vector2d pd = p * d;
        return (0.25 * p(axis_a, axis_b) - pd(axis_a) * pd(axis_b) / 16.0) * overlap(dx, dy);
    }
    const GridPsf& g = grid();
    check_grid_shift(g, dx, dy);
    return grid_shifted_product(axis_a == 0 ? g.psi_x : g.psi_y,
                                axis_b == 0 ? g.psi_x : g.psi_y, dx, dy, threads);
}

Psf make_gaussian(double sigma1, double sigma2, double beta) {
    require(sigma1 > 0.0 && sigma2 > 0.0, ErrorCode::validation,
            "gaussian widths must be positive");
    require(std::abs(beta) < 1.0, ErrorCode::validation,
            "gaussian correlation must satisfy |beta| < 1 (covariance must be positive definite)");
    require(std::isfinite(sigma1) && std::isfinite(sigma2) && std::isfinite(beta),
            ErrorCode::validation, "gaussian parameters must be finite");
    return Psf(GaussianPsf{sigma1, sigma2, beta});
}

Psf make_grid(std::vector<double> samples, int nx, int ny, double half_extent_x,
              double half_extent_y) {
    require(nx >= 16 && ny >= 16, ErrorCode::validation, "grid PSF needs at least 16 samples per axis");
    require(samples.size() == static_cast<std::size_t>(nx) * ny, ErrorCode::validation,
            "sample count does not match nx*ny");

    Grid2d psi(nx, ny, half_extent_x, half_extent_y);
    psi.data() = std::move(samples);
    for (double v : psi.data())
        require(std::isfinite(v), ErrorCode::validation, "grid PSF samples must be finite");

    double norm2 = psi.integrate_cells([&](int ix, int iy) {
        double v = psi.at(ix, iy);
        return v * v;
    });
    require(norm2 > 0.0, ErrorCode::validation, "grid PSF is not normalizable (all samples zero)");
    double scale = 1.0 / std::sqrt(norm2);
    for (double& v : psi.data()) v *= scale;

    for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) {
            double diff = std::abs(psi.at(ix, iy) - psi.at(nx - 1 - ix, ny - 1 - iy));
            require(diff <= kSymmetryTol, ErrorCode::validation,
                    "grid PSF violates inversion symmetry psi(x,y) = psi(-x,-y)");
        }
    }

    double peak = psi.max_abs();
    double edge = 0.0;
    for (int ix = 0; ix < nx; ++ix) {
        edge = std::max(edge, std::abs(psi.at(ix, 0)));
        edge = std::max(edge, std::abs(psi.at(ix, ny - 1)));
    }
    for (int iy = 0; iy < ny; ++iy) {
        edge = std::max(edge, std::abs(psi.at(0, iy)));
        edge = std::max(edge, std::abs(psi.at(nx - 1, iy)));
    }
    require(edge < kBoundaryDecay * peak, ErrorCode::validation,
            "grid PSF amplitude leaks at the domain boundary (needs < 1e-6 of peak)");

    GridPsf g;
    g.psi_x = psi.deriv_x();
    g.psi_y = psi.deriv_y();
    g.psi = std::move(psi);
    return Psf(std::move(g));
}

Psf load_grid_psf(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::validation, "cannot open PSF file: " + path);
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorCode::validation,
            path + ": line 1: missing header");
    std::istringstream hdr(line);
    int nx = 0, ny = 0;
    double hx = 0.0, hy = 0.0;
    require(static_cast<bool>(hdr >> nx >> ny >> hx >> hy), ErrorCode::validation,
            path + ": line 1: expected 'nx ny half_extent_x half_extent_y'");

    std::vector<double> samples;
    samples.reserve(static_cast<std::size_t>(nx) * std::max(ny, 0));
    for (int iy = 0; iy < ny; ++iy) {
        require(static_cast<bool>(std::getline(in, line)), ErrorCode::validation,
                path + ": line " + std::to_string(iy + 2) + ": missing row (" +
                    std::to_string(ny) + " rows expected)");
        std::istringstream row(line);
        for (int ix = 0; ix < nx; ++ix) {
            double v;
            require(static_cast<bool>(row >> v), ErrorCode::validation,
                    path + ": line " + std::to_string(iy + 2) + ": expected " +
                        std::to_string(nx) + " values");
            samples.push_back(v);
        }
        double extra;
        require(!(row >> extra), ErrorCode::validation,
                path + ": line " + std::to_string(iy + 2) + ": too many values");
    }
    return make_grid(std::move(samples), nx, ny, hx, hy);
}

Psf rotate(const Psf& psf, double theta) {
    double c = std::cos(theta), s = std::sin(theta);
    if (psf.is_gaussian()) {
        const GaussianPsf& g = psf.gaussian();
        Eigen::Matrix2d r;
        r << c, -s, s, c;
        Eigen::Matrix2d sp = r * g.sigma_matrix() * r.transpose();
        double s1 = std::sqrt(sp(0, 0));
        double s2 = std::sqrt(sp(1, 1));
        return make_gaussian(s1, s2, sp(0, 1) / (s1 * s2));
    }
    const Grid2d& src = psf.grid().psi;
    Grid2d out(src.nx(), src.ny(), src.hx(), src.hy());
    // active rotation by theta: psi'(f) = psi(R(-theta) f)
    for (int iy = 0; iy < out.ny(); ++iy) {
        for (int ix = 0; ix < out.nx(); ++ix) {
            double x = out.x(ix), y = out.y(iy);
            out.at(ix, iy) = src.interp(c * x + s * y, -s * x + c * y);
        }
    }
    double norm2 = out.integrate_cells([&](int ix, int iy) {
        double v = out.at(ix, iy);
        return v * v;
    });
    require(std::abs(norm2 - 1.0) <= kNormDriftTol, ErrorCode::nonconvergence,
            "grid rotation norm drift exceeds 1e-6");
    return make_grid(out.data(), out.nx(), out.ny(), out.hx(), out.hy());
}

}  // namespace qsr
