#pragma once

#include <Eigen/Dense>
#include <string>
#include <variant>

#include "grid2d.hpp"

namespace qsr {

// Real, unit-norm, inversion-symmetric amplitude psi(x, y) with mu = 0.
// Anisotropy enters through the covariance matrix of |psi|^2.
struct GaussianPsf {
    double sigma1 = 1.0;  // width along x
    double sigma2 = 1.0;  // width along y
    double beta = 0.0;    // correlation, |beta| < 1

    Eigen::Matrix2d sigma_matrix() const {
        Eigen::Matrix2d s;
        s << sigma1 * sigma1, beta * sigma1 * sigma2, beta * sigma1 * sigma2, sigma2 * sigma2;
        return s;
    }
    Eigen::Matrix2d precision_matrix() const { return sigma_matrix().inverse(); }
    double det_sigma() const { return sigma1 * sigma1 * sigma2 * sigma2 * (1.0 - beta * beta); }

    double amplitude(double x, double y) const;
};

// Sampled amplitude on a uniform cell-centered grid, normalized to unit
// discrete L2 norm. Derivative tables are built once at construction.
struct GridPsf {
    Grid2d psi;
    Grid2d psi_x;  // d(psi)/dx
    Grid2d psi_y;  // d(psi)/dy

    double amplitude(double x, double y) const { return psi.interp(x, y); }
};

class Psf {
public:
    explicit Psf(GaussianPsf g) : v_(std::move(g)) {}
    explicit Psf(GridPsf g) : v_(std::move(g)) {}

    bool is_gaussian() const { return std::holds_alternative<GaussianPsf>(v_); }
    const GaussianPsf& gaussian() const { return std::get<GaussianPsf>(v_); }
    const GridPsf& grid() const { return std::get<GridPsf>(v_); }

    double amplitude(double x, double y) const;

    // sigma scale used to size quadrature domains and small-r probes
    double length_scale() const;

    // Autocorrelation-type inner products between shifted copies of psi.
    // All arguments are displacements d = b - a between the two shifts.
    //   overlap(d)        = <psi(.-a) | psi(.-b)>
    //   overlap_d1(d, j)  = <psi(.-a) | (d_j psi)(.-b)>
    //   overlap_d2(d,i,j) = <(d_i psi)(.-a) | (d_j psi)(.-b)>
    double overlap(double dx, double dy, int threads = 1) const;
    double overlap_d1(double dx, double dy, int axis, int threads = 1) const;
    double overlap_d2(double dx, double dy, int axis_a, int axis_b, int threads = 1) const;

private:
    std::variant<GaussianPsf, GridPsf> v_;
};

Psf make_gaussian(double sigma1, double sigma2, double beta);
Psf make_grid(std::vector<double> samples, int nx, int ny, double half_extent_x,
              double half_extent_y);
Psf load_grid_psf(const std::string& path);
Psf rotate(const Psf& psf, double theta);

}  // namespace qsr
