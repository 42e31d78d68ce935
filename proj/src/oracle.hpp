#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <memory>
#include <string>
#include <vector>

#include "qfim.hpp"

namespace qsr {

// Pairwise inner products <state(a)|state(b)> of position-shifted copies of
// one fixed profile. Everything the oracle does reduces to these numbers.
class ShiftFamily {
public:
    virtual ~ShiftFamily() = default;
    virtual std::complex<long double> overlap(const Eigen::Vector2d& a,
                                              const Eigen::Vector2d& b) const = 0;
};

// Real PSF family; Gaussian overlaps are evaluated in long double.
std::unique_ptr<ShiftFamily> make_psf_family(const Psf& psf, int threads = 1);

// Test-only negative control: Gaussian amplitude with a cubic phase
// exp(i c x^3), which makes the SLDs genuinely complex. (A quadratic chirp
// would not: its shifted-state overlaps stay real.)
std::unique_ptr<ShiftFamily> make_chirped_gaussian_family(const GaussianPsf& psf, double chirp);

// Finite Gram subspace spanned by {psi1, psi2, Px psi1, Py psi1, Px psi2,
// Py psi2}; exact within quadrature because rho and its analytic parameter
// derivatives live in this span.
struct GramSubspace {
    std::array<std::string, 6> labels;
    Eigen::Matrix<double, 6, 6> gram;
    Eigen::MatrixXd transform;  // rank x 6: coefficients of each basis function
    int rank = 0;

    // max |(T^H T - G)_ij|; small iff the kept basis reproduces the Gram
    double reproduction_error() const;
};

GramSubspace build_subspace(const Psf& psf, const SceneParams& scene, int threads = 1);

// Brute-force QFIM: rho and central-difference d_g rho represented in the
// orthonormalized union subspace of shifted states at g and g +- fd_step,
// then the spectral QFIM formula applied verbatim. No reuse of the
// closed-form QFIM expressions.
struct OracleQfim {
    Eigen::Matrix4d qfim;           // at fd_step
    Eigen::Matrix4d qfim_half;      // at fd_step / 2
    double fd_step = 0.0;
    double fd_error_estimate = 0.0;  // max entrywise |qfim - qfim_half|
    double lambda1 = 0.0;            // nonzero eigenvalues of rho in the subspace
    double lambda2 = 0.0;
};

inline constexpr double kOracleDefaultStep = 2.5e-4;

OracleQfim qfim_oracle(const ShiftFamily& family, const SceneParams& scene,
                       double fd_step = kOracleDefaultStep);

// Eigenvalues of rho diagonalized in the 2-state Gram span (independent of
// Eq. (ev)); ascending, padded with zeros at rank collapse.
std::array<double, 2> rho_eigenvalues(const ShiftFamily& family, const SceneParams& scene);

// SLD operators from the spectral formula, in the kept orthonormal frame.
struct SldSystem {
    Eigen::MatrixXcd rho;
    std::array<Eigen::MatrixXcd, 4> drho;
    std::array<Eigen::MatrixXcd, 4> sld;

    double compatibility_residual() const;  // max_ij |Im Tr(rho L_i L_j)|
    double defining_residual() const;       // max_i |(L rho + rho L)/2 - drho|
    double trace_residual() const;          // max_i |Tr(rho L_i)|
    double max_imag_sld() const;
};

SldSystem sld_matrices(const ShiftFamily& family, const SceneParams& scene,
                       double fd_step = kOracleDefaultStep);

// Convenience wrapper used by qfim_engine: max |Im Tr(rho L_i L_j)|.
double sld_residual(const Psf& psf, const SceneParams& scene, int threads = 1);

}  // namespace qsr
