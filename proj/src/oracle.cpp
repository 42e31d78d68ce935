#include "oracle.hpp"

#include <cmath>

#include "error.hpp"

namespace qsr {

namespace {

using ld = long double;
using cld = std::complex<ld>;
using MatrixXld = Eigen::Matrix<ld, Eigen::Dynamic, Eigen::Dynamic>;
using MatrixXcld = Eigen::Matrix<cld, Eigen::Dynamic, Eigen::Dynamic>;
using VectorXcld = Eigen::Matrix<cld, Eigen::Dynamic, 1>;

constexpr ld kRankCutoff = 1e-17L;   // relative to largest Gram eigenvalue
constexpr ld kRhoEigenTol = 1e-12L;  // "nonzero" eigenvalue threshold

class GaussianFamily final : public ShiftFamily {
public:
    explicit GaussianFamily(const GaussianPsf& g) {
        ld s1 = g.sigma1, s2 = g.sigma2, b = g.beta;
        ld det = s1 * s1 * s2 * s2 * (1.0L - b * b);
        p11_ = s2 * s2 / det;
        p22_ = s1 * s1 / det;
        p12_ = -b * s1 * s2 / det;
    }

    std::complex<ld> overlap(const Eigen::Vector2d& a, const Eigen::Vector2d& b) const override {
        ld dx = static_cast<ld>(b.x()) - static_cast<ld>(a.x());
        ld dy = static_cast<ld>(b.y()) - static_cast<ld>(a.y());
        ld q = p11_ * dx * dx + 2.0L * p12_ * dx * dy + p22_ * dy * dy;
        return {std::exp(-q / 8.0L), 0.0L};
    }

private:
    ld p11_, p12_, p22_;
};

// Overlaps of shifted grid PSFs through the trigonometric interpolant of the
// samples: O(d) = sum_k W_k exp(i k . d) with W = |DFT(psi)|^2 * dA / (nx ny).
// Spectrally accurate for smooth decaying amplitudes; the bicubic route's
// ~1e-9 quadrature bias gets amplified ~1e5 by the small-eigenvalue terms of
// the spectral QFIM formula, which this path avoids.
class GridFamily final : public ShiftFamily {
public:
    explicit GridFamily(const GridPsf& g) {
        const Grid2d& psi = g.psi;
        int nx = psi.nx(), ny = psi.ny();
        Eigen::MatrixXcd samples(nx, ny);
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) samples(i, j) = psi.at(i, j);
        auto dft_matrix = [](int n) {
            Eigen::MatrixXcd f(n, n);
            for (int m = 0; m < n; ++m)
                for (int i = 0; i < n; ++i) {
                    double ph = -2.0 * 3.141592653589793238462643383279 * m * i / n;
                    f(m, i) = std::complex<double>(std::cos(ph), std::sin(ph));
                }
            return f;
        };
        Eigen::MatrixXcd hat = dft_matrix(nx) * samples * dft_matrix(ny).transpose();
        weights_ = hat.cwiseAbs2() * (psi.cell_area() / (static_cast<double>(nx) * ny));
        kx_.resize(nx);
        ky_.resize(ny);
        for (int m = 0; m < nx; ++m) {
            int ms = m <= nx / 2 ? m : m - nx;
            kx_[m] = 3.141592653589793238462643383279 * ms / psi.hx();
        }
        for (int n = 0; n < ny; ++n) {
            int ns = n <= ny / 2 ? n : n - ny;
            ky_[n] = 3.141592653589793238462643383279 * ns / psi.hy();
        }
        half_x_ = psi.hx();
        half_y_ = psi.hy();
    }

    std::complex<ld> overlap(const Eigen::Vector2d& a, const Eigen::Vector2d& b) const override {
        double dx = b.x() - a.x(), dy = b.y() - a.y();
        require(std::abs(dx) <= half_x_ && std::abs(dy) <= half_y_, ErrorCode::validation,
                "shift exceeds grid PSF domain support");
        int nx = static_cast<int>(kx_.size()), ny = static_cast<int>(ky_.size());
        Eigen::VectorXd cx(nx), sx(nx), cy(ny), sy(ny);
        for (int m = 0; m < nx; ++m) {
            cx(m) = std::cos(kx_[m] * dx);
            sx(m) = std::sin(kx_[m] * dx);
        }
        for (int n = 0; n < ny; ++n) {
            cy(n) = std::cos(ky_[n] * dy);
            sy(n) = std::sin(ky_[n] * dy);
        }
        // real part of px^T W py; the imaginary part vanishes for real psi
        double acc = cx.dot(weights_ * cy) - sx.dot(weights_ * sy);
        return {static_cast<ld>(acc), 0.0L};
    }

private:
    Eigen::MatrixXd weights_;  // nx x ny
    std::vector<double> kx_, ky_;
    double half_x_ = 0.0, half_y_ = 0.0;
};

class ChirpedGaussianFamily final : public ShiftFamily {
public:
    ChirpedGaussianFamily(const GaussianPsf& g, double chirp) : chirp_(chirp) {
        ld s1 = g.sigma1, s2 = g.sigma2, b = g.beta;
        det_sigma_ = s1 * s1 * s2 * s2 * (1.0L - b * b);
        p11_ = s2 * s2 / det_sigma_;
        p22_ = s1 * s1 / det_sigma_;
        p12_ = -b * s1 * s2 / det_sigma_;
    }

    std::complex<ld> overlap(const Eigen::Vector2d& av, const Eigen::Vector2d& bv) const override {
        ld ax = av.x(), ay = av.y(), bx = bv.x(), by = bv.y();
        ld mx = 0.5L * (ax + bx), my = 0.5L * (ay + by);
        ld dx = bx - ax, dy = by - ay;
        ld q = ax - bx;
        cld i(0.0L, 1.0L);

        // quadratic form A = P - 6 i c q E11, linear term, constant
        cld a11 = cld(p11_, 0) - 6.0L * i * cld(chirp_ * q, 0);
        cld a12(p12_, 0), a22(p22_, 0);
        cld b1 = cld(p11_ * mx + p12_ * my, 0) - 3.0L * i * cld(chirp_ * q * (ax + bx), 0);
        cld b2 = cld(p12_ * mx + p22_ * my, 0);
        cld cst = cld(-0.5L * (p11_ * mx * mx + 2.0L * p12_ * mx * my + p22_ * my * my) -
                          0.125L * (p11_ * dx * dx + 2.0L * p12_ * dx * dy + p22_ * dy * dy),
                      0) +
                  i * cld(chirp_ * q * (ax * ax + ax * bx + bx * bx), 0);

        cld det_a = a11 * a22 - a12 * a12;
        // b^T A^-1 b / 2
        cld quad = (a22 * b1 * b1 - 2.0L * a12 * b1 * b2 + a11 * b2 * b2) / det_a;
        return std::exp(0.5L * quad + cst) / std::sqrt(det_sigma_ * det_a);
    }

private:
    ld p11_, p12_, p22_, det_sigma_;
    ld chirp_;
};

struct Frame {
    MatrixXcld coeffs;  // rank x n, column j = orthonormal coefficients of state j
    int rank = 0;
};

// Löwdin-style orthonormalization via the Gram eigen-decomposition.
Frame orthonormalize(const MatrixXcld& gram, ld cutoff_rel) {
    Eigen::SelfAdjointEigenSolver<MatrixXcld> es(gram);
    require(es.info() == Eigen::Success, ErrorCode::nonconvergence,
            "Gram eigen-decomposition failed");
    const auto& ev = es.eigenvalues();
    ld cutoff = cutoff_rel * ev(ev.size() - 1);
    Frame f;
    std::vector<int> keep;
    for (int k = 0; k < ev.size(); ++k)
        if (ev(k) > cutoff) keep.push_back(k);
    f.rank = static_cast<int>(keep.size());
    f.coeffs.resize(f.rank, gram.rows());
    for (int kk = 0; kk < f.rank; ++kk) {
        int k = keep[kk];
        ld root = std::sqrt(ev(k));
        for (int n = 0; n < gram.rows(); ++n)
            f.coeffs(kk, n) = root * std::conj(es.eigenvectors()(n, k));
    }
    return f;
}

std::array<Eigen::Vector2d, 2> scene_positions(const SceneParams& s) {
    return {s.source1(), s.source2()};
}

// Scene list: base, then (+h, -h) per parameter.
std::vector<SceneParams> fd_scenes(const SceneParams& scene, double h) {
    std::vector<SceneParams> scenes;
    scenes.push_back(scene);
    for (int i = 0; i < 4; ++i) {
        for (double sgn : {+1.0, -1.0}) {
            SceneParams sc = scene;
            double* fields[4] = {&sc.x_bar, &sc.y_bar, &sc.r, &sc.alpha};
            *fields[i] += sgn * h;
            scenes.push_back(sc);
        }
    }
    return scenes;
}

struct UnionSubspace {
    Frame frame;
    MatrixXcld rho_base;
    std::array<MatrixXcld, 4> drho;
    Eigen::SelfAdjointEigenSolver<MatrixXcld> rho_eigen;
};

UnionSubspace build_union(const ShiftFamily& family, const SceneParams& scene, double h) {
    require(scene.r > 0.0, ErrorCode::validation, "oracle requires r > 0");
    require(h > 0.0 && h < scene.r, ErrorCode::validation,
            "fd_step must lie in (0, r) so all probe scenes are valid");

    std::vector<SceneParams> scenes = fd_scenes(scene, h);
    std::vector<Eigen::Vector2d> pos;
    pos.reserve(2 * scenes.size());
    for (const auto& sc : scenes) {
        auto p = scene_positions(sc);
        pos.push_back(p[0]);
        pos.push_back(p[1]);
    }
    int n = static_cast<int>(pos.size());
    MatrixXcld gram(n, n);
    for (int i = 0; i < n; ++i) {
        gram(i, i) = family.overlap(pos[i], pos[i]);
        for (int j = i + 1; j < n; ++j) {
            cld v = family.overlap(pos[i], pos[j]);
            gram(i, j) = v;
            gram(j, i) = std::conj(v);
        }
    }

    UnionSubspace u;
    u.frame = orthonormalize(gram, kRankCutoff);
    auto rho_of = [&](int scene_idx, double eps) {
        VectorXcld v1 = u.frame.coeffs.col(2 * scene_idx);
        VectorXcld v2 = u.frame.coeffs.col(2 * scene_idx + 1);
        ld w1 = 0.5L * (1.0L - static_cast<ld>(eps));
        ld w2 = 0.5L * (1.0L + static_cast<ld>(eps));
        return MatrixXcld(w1 * v1 * v1.adjoint() + w2 * v2 * v2.adjoint());
    };
    u.rho_base = rho_of(0, scene.epsilon);
    for (int i = 0; i < 4; ++i) {
        MatrixXcld plus = rho_of(1 + 2 * i, scene.epsilon);
        MatrixXcld minus = rho_of(2 + 2 * i, scene.epsilon);
        u.drho[i] = (plus - minus) / cld(2.0L * static_cast<ld>(h), 0.0L);
    }
    u.rho_eigen.compute(u.rho_base);
    require(u.rho_eigen.info() == Eigen::Success, ErrorCode::nonconvergence,
            "rho eigen-decomposition failed");
    return u;
}

Eigen::Matrix4d qfim_from_union(const UnionSubspace& u) {
    const auto& ev = u.rho_eigen.eigenvalues();
    const auto& vecs = u.rho_eigen.eigenvectors();
    std::vector<int> nz;
    for (int k = 0; k < ev.size(); ++k)
        if (ev(k) > kRhoEigenTol) nz.push_back(k);

    Eigen::Matrix4d q = Eigen::Matrix4d::Zero();
    // cache drho_i |lambda_k>
    std::array<std::vector<VectorXcld>, 4> dv;
    for (int i = 0; i < 4; ++i) {
        dv[i].reserve(nz.size());
        for (int k : nz) dv[i].push_back(u.drho[i] * vecs.col(k));
    }
    for (int i = 0; i < 4; ++i) {
        for (int j = i; j < 4; ++j) {
            cld acc(0.0L, 0.0L);
            for (std::size_t a = 0; a < nz.size(); ++a) {
                int k = nz[a];
                acc += 4.0L / ev(k) * dv[i][a].dot(dv[j][a]);  // dot() conjugates the left factor
            }
            for (std::size_t a = 0; a < nz.size(); ++a) {
                for (std::size_t b = 0; b < nz.size(); ++b) {
                    int k = nz[a], h = nz[b];
                    ld coef = 2.0L * (1.0L / (ev(k) + ev(h)) - 1.0L / ev(k) - 1.0L / ev(h));
                    cld m1 = vecs.col(h).dot(dv[i][a]);  // <h| drho_i |k>
                    cld m2 = vecs.col(k).dot(dv[j][b]);  // <k| drho_j |h>
                    acc += coef * m1 * m2;
                }
            }
            q(i, j) = q(j, i) = static_cast<double>(acc.real());
        }
    }
    return q;
}

}  // namespace

std::unique_ptr<ShiftFamily> make_psf_family(const Psf& psf, int threads) {
    (void)threads;
    if (psf.is_gaussian()) return std::make_unique<GaussianFamily>(psf.gaussian());
    return std::make_unique<GridFamily>(psf.grid());
}

std::unique_ptr<ShiftFamily> make_chirped_gaussian_family(const GaussianPsf& psf, double chirp) {
    return std::make_unique<ChirpedGaussianFamily>(psf, chirp);
}

OracleQfim qfim_oracle(const ShiftFamily& family, const SceneParams& scene, double fd_step) {
    OracleQfim out;
    out.fd_step = fd_step;

    UnionSubspace full = build_union(family, scene, fd_step);
    out.qfim = qfim_from_union(full);
    const auto& ev = full.rho_eigen.eigenvalues();
    std::vector<double> nz;
    for (int k = 0; k < ev.size(); ++k)
        if (ev(k) > kRhoEigenTol) nz.push_back(static_cast<double>(ev(k)));
    require(nz.size() >= 1, ErrorCode::nonconvergence, "rho has no nonzero eigenvalues");
    out.lambda2 = nz.back();
    out.lambda1 = nz.size() >= 2 ? nz[nz.size() - 2] : 0.0;

    UnionSubspace half = build_union(family, scene, 0.5 * fd_step);
    out.qfim_half = qfim_from_union(half);
    out.fd_error_estimate = (out.qfim - out.qfim_half).cwiseAbs().maxCoeff();
    return out;
}

std::array<double, 2> rho_eigenvalues(const ShiftFamily& family, const SceneParams& scene) {
    auto pos = scene_positions(scene);
    MatrixXcld gram(2, 2);
    gram(0, 0) = family.overlap(pos[0], pos[0]);
    gram(1, 1) = family.overlap(pos[1], pos[1]);
    gram(0, 1) = family.overlap(pos[0], pos[1]);
    gram(1, 0) = std::conj(gram(0, 1));
    Frame f = orthonormalize(gram, 1e-14L);
    ld w1 = 0.5L * (1.0L - static_cast<ld>(scene.epsilon));
    ld w2 = 0.5L * (1.0L + static_cast<ld>(scene.epsilon));
    MatrixXcld rho = w1 * f.coeffs.col(0) * f.coeffs.col(0).adjoint() +
                     w2 * f.coeffs.col(1) * f.coeffs.col(1).adjoint();
    Eigen::SelfAdjointEigenSolver<MatrixXcld> es(rho);
    std::array<double, 2> out = {0.0, 0.0};
    int n = static_cast<int>(es.eigenvalues().size());
    if (n >= 1) out[1] = static_cast<double>(es.eigenvalues()(n - 1));
    if (n >= 2) out[0] = static_cast<double>(es.eigenvalues()(n - 2));
    return out;
}

GramSubspace build_subspace(const Psf& psf, const SceneParams& scene, int threads) {
    require(scene.r >= 0.0, ErrorCode::validation, "r must be >= 0");
    Eigen::Vector2d p1 = scene.source1(), p2 = scene.source2();
    double dx = p2.x() - p1.x(), dy = p2.y() - p1.y();

    GramSubspace out;
    out.labels = {"psi1", "psi2", "Px psi1", "Py psi1", "Px psi2", "Py psi2"};

    // basis descriptors: position index (0 -> p1, 1 -> p2), derivative axis (-1 none)
    struct B {
        int pos;
        int axis;
    };
    std::array<B, 6> basis = {{{0, -1}, {1, -1}, {0, 0}, {0, 1}, {1, 0}, {1, 1}}};

    auto entry = [&](const B& a, const B& b) {
        double sx = (b.pos - a.pos) * dx, sy = (b.pos - a.pos) * dy;
        if (a.axis < 0 && b.axis < 0) return psf.overlap(sx, sy, threads);
        if (a.axis < 0) return psf.overlap_d1(sx, sy, b.axis, threads);
        if (b.axis < 0) return psf.overlap_d1(-sx, -sy, a.axis, threads);
        return psf.overlap_d2(sx, sy, a.axis, b.axis, threads);
    };
    for (int i = 0; i < 6; ++i)
        for (int j = i; j < 6; ++j) out.gram(i, j) = out.gram(j, i) = entry(basis[i], basis[j]);

    MatrixXcld g(6, 6);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) g(i, j) = cld(out.gram(i, j), 0.0L);
    Frame f = orthonormalize(g, 1e-10L);
    out.rank = f.rank;
    out.transform.resize(f.rank, 6);
    for (int k = 0; k < f.rank; ++k)
        for (int n = 0; n < 6; ++n) out.transform(k, n) = static_cast<double>(f.coeffs(k, n).real());
    return out;
}

double GramSubspace::reproduction_error() const {
    Eigen::MatrixXd recon = transform.transpose() * transform;
    return (recon - gram).cwiseAbs().maxCoeff();
}

SldSystem sld_matrices(const ShiftFamily& family, const SceneParams& scene, double fd_step) {
    UnionSubspace u = build_union(family, scene, fd_step);
    const auto& ev = u.rho_eigen.eigenvalues();
    const auto& vecs = u.rho_eigen.eigenvectors();
    int n = static_cast<int>(ev.size());

    SldSystem out;
    out.rho = u.rho_base.cast<std::complex<double>>();
    for (int i = 0; i < 4; ++i) out.drho[i] = u.drho[i].cast<std::complex<double>>();

    for (int i = 0; i < 4; ++i) {
        MatrixXcld L = MatrixXcld::Zero(n, n);
        for (int k = 0; k < n; ++k) {
            for (int h = 0; h < n; ++h) {
                ld s = ev(k) + ev(h);
                if (s <= kRhoEigenTol) continue;  // per the formula's own restriction
                cld me = vecs.col(k).dot(u.drho[i] * vecs.col(h));
                L += (2.0L * me / s) * vecs.col(k) * vecs.col(h).adjoint();
            }
        }
        out.sld[i] = L.cast<std::complex<double>>();
    }
    return out;
}

double SldSystem::compatibility_residual() const {
    double worst = 0.0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            worst = std::max(worst, std::abs((rho * sld[i] * sld[j]).trace().imag()));
    return worst;
}

double SldSystem::defining_residual() const {
    double worst = 0.0;
    for (int i = 0; i < 4; ++i) {
        Eigen::MatrixXcd lhs = 0.5 * (sld[i] * rho + rho * sld[i]);
        worst = std::max(worst, (lhs - drho[i]).cwiseAbs().maxCoeff());
    }
    return worst;
}

double SldSystem::trace_residual() const {
    double worst = 0.0;
    for (int i = 0; i < 4; ++i) worst = std::max(worst, std::abs((rho * sld[i]).trace()));
    return worst;
}

double SldSystem::max_imag_sld() const {
    double worst = 0.0;
    for (int i = 0; i < 4; ++i) worst = std::max(worst, sld[i].imag().cwiseAbs().maxCoeff());
    return worst;
}

double sld_residual(const Psf& psf, const SceneParams& scene, int threads) {
    auto family = make_psf_family(psf, threads);
    return sld_matrices(*family, scene).compatibility_residual();
}

}  // namespace qsr
