#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "qfim.hpp"
#include "rng.hpp"

namespace qsr {

// Intensity Lambda(x,y) = |psi(x,y)|^2 with partial derivatives up to (2,2).
// Gaussian PSFs get closed-form derivatives; grid PSFs use 4th-order
// finite-difference tables with bicubic evaluation.
class IntensityField {
public:
    explicit IntensityField(const Psf& psf);

    double value(double x, double y) const { return deriv(0, 0, x, y); }
    double deriv(int dx_order, int dy_order, double x, double y) const;

    bool gaussian_backend() const { return gaussian_; }
    double peak() const { return peak_; }
    // quadrature half-extent covering the intensity support
    double support_half_extent() const { return support_; }

private:
    bool gaussian_ = true;
    // Gaussian backend: Lambda^{(i,j)} = H_ij(u) * Lambda with u = Sigma^-1 f;
    // H_ij stored as dense coefficient tables over u1^k u2^l.
    Eigen::Matrix2d prec_ = Eigen::Matrix2d::Identity();
    double norm_ = 1.0;
    std::array<std::array<Eigen::Matrix<double, 5, 5>, 3>, 3> hpoly_{};
    // Grid backend: derivative tables.
    std::array<std::array<Grid2d, 3>, 3> tables_{};
    double peak_ = 0.0;
    double support_ = 0.0;
};

// Single-photon detection pdf and its derivatives w.r.t. (Xb, Yb, r, alpha).
double photon_pdf(const IntensityField& field, const SceneParams& scene, double x, double y);
struct PdfWithGrad {
    double p = 0.0;
    std::array<double, 4> dp{};
};
PdfWithGrad photon_pdf_grad(const IntensityField& field, const SceneParams& scene, double x,
                            double y);

// Classical Fisher information per detected photon for ideal continuum
// direct imaging, by quadrature with refinement convergence (< 1e-6).
FisherMatrix cfim_numeric(const Psf& psf, const SceneParams& scene, int threads = 1);

// Coefficient integrals of the small-r expansion; indices follow the
// expansion displays (a: 1..2, b/c: 0..2, f/q: 0..1).
struct SmallRCoeffs {
    double a[3][3] = {};
    double b[3][3] = {};
    double c[3][3] = {};
    double f[2][2] = {};
    double q[2][2] = {};
    double t11 = 0.0;
};
SmallRCoeffs smallr_coeffs(const Psf& psf, int threads = 1);

// O(r^2) expansion of the classical Fisher matrix.
FisherMatrix cfim_smallr(const SmallRCoeffs& coeffs, double r, double alpha, double epsilon);

// Orientation factor of the small-r direct-imaging distance precision.
double direct_a_factor(const SmallRCoeffs& coeffs, double alpha);

// H_r^(direct) = prefactor * r^2 (1-eps^2)^2 N * A. The prefactor was
// resolved numerically against N/(J^-1)_33: 1/16.
inline constexpr double kDirectPrefactor = 1.0 / 16.0;
struct DirectPrecision {
    double h_r_direct = 0.0;
    double a_factor = 0.0;
};
DirectPrecision precision_r_direct(const SceneParams& scene, const SmallRCoeffs& coeffs,
                                   double n_total);

struct PhotonSample {
    std::vector<double> x;
    std::vector<double> y;
    std::uint64_t seed = 0;
    SceneParams scene;
};
PhotonSample sample_photons(const Psf& psf, const SceneParams& scene, std::int64_t count,
                            std::uint64_t seed);

// free_mask selects which of (Xb, Yb, r, alpha) are estimated; the others
// stay at their init values.
struct MleResult {
    SceneParams estimate;
    double loglik = 0.0;
    bool converged = false;
    int n_evals = 0;
};
MleResult mle_fit(const PhotonSample& sample, const Psf& psf, const SceneParams& init,
                  const std::array<bool, 4>& free_mask);

struct ExperimentRow {
    double r = 0.0;
    double empirical_var = 0.0;
    double crb_var = 0.0;
    int trials = 0;
    int converged = 0;
};
std::vector<ExperimentRow> rayleigh_curse_experiment(const Psf& psf, double epsilon, double alpha,
                                                     const std::vector<double>& r_list,
                                                     std::int64_t n_photons, int trials,
                                                     std::uint64_t seed, int threads = 1);

}  // namespace qsr
