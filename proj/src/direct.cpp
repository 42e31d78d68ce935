#include "direct.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "parallel.hpp"

namespace qsr {

namespace {
constexpr double kPdfClip = 1e-300;      // likelihood support clipping
constexpr double kCubeFloor = 1e-12;     // Lambda^3 integrals: keep Lambda > floor * peak
constexpr double kRefineTol = 1e-6;
}  // namespace

IntensityField::IntensityField(const Psf& psf) {
    if (psf.is_gaussian()) {
        gaussian_ = true;
        const GaussianPsf& g = psf.gaussian();
        prec_ = g.precision_matrix();
        norm_ = 1.0 / (2.0 * 3.141592653589793238462643383279 * std::sqrt(g.det_sigma()));
        peak_ = norm_;
        support_ = 8.5 * std::max(g.sigma1, g.sigma2);

        // H_{0,0} = 1; d/dx adds {k*P11 shift, l*P12 shift, -u1 multiply},
        // d/dy adds {k*P12 shift, l*P22 shift, -u2 multiply} on u-polynomials.
        using Poly = Eigen::Matrix<double, 5, 5>;
        auto dstep = [&](const Poly& c, int axis) {
            Poly out = Poly::Zero();
            double pa1 = axis == 0 ? prec_(0, 0) : prec_(0, 1);
            double pa2 = axis == 0 ? prec_(0, 1) : prec_(1, 1);
            for (int k = 0; k < 5; ++k) {
                for (int l = 0; l < 5; ++l) {
                    double v = c(k, l);
                    if (v == 0.0) continue;
                    if (k > 0) out(k - 1, l) += v * k * pa1;
                    if (l > 0) out(k, l - 1) += v * l * pa2;
                    if (axis == 0)
                        out(k + 1, l) -= v;
                    else
                        out(k, l + 1) -= v;
                }
            }
            return out;
        };
        hpoly_[0][0] = Poly::Zero();
        hpoly_[0][0](0, 0) = 1.0;
        for (int j = 1; j < 3; ++j) hpoly_[0][j] = dstep(hpoly_[0][j - 1], 1);
        for (int i = 1; i < 3; ++i)
            for (int j = 0; j < 3; ++j) hpoly_[i][j] = dstep(hpoly_[i - 1][j], 0);
    } else {
        gaussian_ = false;
        const Grid2d& psi = psf.grid().psi;
        Grid2d lam(psi.nx(), psi.ny(), psi.hx(), psi.hy());
        for (int iy = 0; iy < psi.ny(); ++iy)
            for (int ix = 0; ix < psi.nx(); ++ix) {
                double v = psi.at(ix, iy);
                lam.at(ix, iy) = v * v;
            }
        tables_[0][0] = std::move(lam);
        for (int j = 1; j < 3; ++j) tables_[0][j] = tables_[0][j - 1].deriv_y();
        for (int i = 1; i < 3; ++i)
            for (int j = 0; j < 3; ++j) tables_[i][j] = tables_[i - 1][j].deriv_x();
        peak_ = tables_[0][0].max_abs();
        support_ = std::min(psi.hx(), psi.hy());
    }
}

double IntensityField::deriv(int dx_order, int dy_order, double x, double y) const {
    if (!gaussian_) return tables_[dx_order][dy_order].interp(x, y);
    double u1 = prec_(0, 0) * x + prec_(0, 1) * y;
    double u2 = prec_(0, 1) * x + prec_(1, 1) * y;
    double lam = norm_ * std::exp(-0.5 * (u1 * x + u2 * y));
    if (dx_order == 0 && dy_order == 0) return lam;
    const auto& c = hpoly_[dx_order][dy_order];
    double acc = 0.0;
    double u1p = 1.0;
    for (int k = 0; k < 5; ++k) {
        double u2p = 1.0;
        for (int l = 0; l < 5; ++l) {
            if (c(k, l) != 0.0) acc += c(k, l) * u1p * u2p;
            u2p *= u2;
        }
        u1p *= u1;
    }
    return acc * lam;
}

double photon_pdf(const IntensityField& field, const SceneParams& scene, double x, double y) {
    Eigen::Vector2d p1 = scene.source1(), p2 = scene.source2();
    double w1 = 0.5 * (1.0 - scene.epsilon), w2 = 0.5 * (1.0 + scene.epsilon);
    return w1 * field.value(x - p1.x(), y - p1.y()) + w2 * field.value(x - p2.x(), y - p2.y());
}

PdfWithGrad photon_pdf_grad(const IntensityField& field, const SceneParams& scene, double x,
                            double y) {
    Eigen::Vector2d p1 = scene.source1(), p2 = scene.source2();
    double w1 = 0.5 * (1.0 - scene.epsilon), w2 = 0.5 * (1.0 + scene.epsilon);
    double c = std::cos(scene.alpha), s = std::sin(scene.alpha);
    double rh = 0.5 * scene.r;

    double l1 = field.value(x - p1.x(), y - p1.y());
    double l2 = field.value(x - p2.x(), y - p2.y());
    double l1x = field.deriv(1, 0, x - p1.x(), y - p1.y());
    double l1y = field.deriv(0, 1, x - p1.x(), y - p1.y());
    double l2x = field.deriv(1, 0, x - p2.x(), y - p2.y());
    double l2y = field.deriv(0, 1, x - p2.x(), y - p2.y());

    // d(source position)/d(Xb, Yb, r, alpha)
    double j1[4][2] = {{1, 0}, {0, 1}, {-0.5 * c, -0.5 * s}, {rh * s, -rh * c}};
    double j2[4][2] = {{1, 0}, {0, 1}, {0.5 * c, 0.5 * s}, {-rh * s, rh * c}};

    PdfWithGrad out;
    out.p = w1 * l1 + w2 * l2;
    for (int g = 0; g < 4; ++g) {
        out.dp[g] = -w1 * (l1x * j1[g][0] + l1y * j1[g][1]) -
                    w2 * (l2x * j2[g][0] + l2y * j2[g][1]);
    }
    return out;
}

namespace {

// Midpoint quadrature of several integrands at once over a centered square
// domain, with ordered row reduction.
template <int N>
std::array<double, N> integrate_many(double cx, double cy, double half, int n, int threads,
                                     const std::function<void(double, double, std::array<double, N>&)>& fn) {
    double h = 2.0 * half / n;
    std::vector<std::array<double, N>> rows(n);
    parallel_for(n, threads, [&](std::size_t iy) {
        std::array<double, N> acc{};
        double y = cy - half + (iy + 0.5) * h;
        for (int ix = 0; ix < n; ++ix) {
            double x = cx - half + (ix + 0.5) * h;
            fn(x, y, acc);
        }
        rows[iy] = acc;
    });
    std::array<double, N> total{};
    for (const auto& r : rows)
        for (int k = 0; k < N; ++k) total[k] += r[k];
    for (int k = 0; k < N; ++k) total[k] *= h * h;
    return total;
}

FisherMatrix pack_cfim(const std::array<double, 10>& v) {
    FisherMatrix f;
    f.kind = FisherMatrix::Kind::classical;
    int idx = 0;
    for (int i = 0; i < 4; ++i)
        for (int j = i; j < 4; ++j) {
            f.m(i, j) = f.m(j, i) = v[idx];
            ++idx;
        }
    return f;
}

std::array<double, 10> cfim_level(const IntensityField& field, const SceneParams& scene,
                                  double half, int n, int threads) {
    return integrate_many<10>(
        scene.x_bar, scene.y_bar, half, n, threads,
        [&](double x, double y, std::array<double, 10>& acc) {
            PdfWithGrad pg = photon_pdf_grad(field, scene, x, y);
            if (pg.p < kPdfClip) return;
            double inv = 1.0 / pg.p;
            int idx = 0;
            for (int i = 0; i < 4; ++i)
                for (int j = i; j < 4; ++j) {
                    acc[idx] += pg.dp[i] * pg.dp[j] * inv;
                    ++idx;
                }
        });
}

}  // namespace

FisherMatrix cfim_numeric(const Psf& psf, const SceneParams& scene, int threads) {
    scene.validate(false);
    IntensityField field(psf);

    if (field.gaussian_backend()) {
        double half = field.support_half_extent() + 0.5 * scene.r;
        std::array<double, 10> prev{};
        for (int n : {512, 1024, 2048}) {
            std::array<double, 10> cur = cfim_level(field, scene, half, n, threads);
            if (n != 512) {
                double scale = 0.0, diff = 0.0;
                for (int k = 0; k < 10; ++k) {
                    scale = std::max(scale, std::abs(cur[k]));
                    diff = std::max(diff, std::abs(cur[k] - prev[k]));
                }
                if (diff <= kRefineTol * std::max(scale, 1e-12)) return pack_cfim(cur);
            }
            prev = cur;
        }
        throw Error(ErrorCode::nonconvergence,
                    "classical Fisher quadrature did not converge under refinement");
    }

    // grid backend: integrate at the grid's own resolution over a domain
    // covering both shifted copies; refinement check by 2x subsampling
    const Grid2d& base = psf.grid().psi;
    double half = std::max(base.hx(), base.hy()) + 0.5 * scene.r;
    int n = static_cast<int>(std::ceil(2.0 * half / std::min(base.dx(), base.dy())));
    std::array<double, 10> fine = cfim_level(field, scene, half, n, threads);
    std::array<double, 10> coarse = cfim_level(field, scene, half, n / 2, threads);
    double scale = 0.0, diff = 0.0;
    for (int k = 0; k < 10; ++k) {
        scale = std::max(scale, std::abs(fine[k]));
        diff = std::max(diff, std::abs(fine[k] - coarse[k]));
    }
    require(diff <= 1e-4 * std::max(scale, 1e-12), ErrorCode::nonconvergence,
            "grid-backend classical Fisher quadrature did not converge");
    return pack_cfim(fine);
}

namespace {

struct CoeffSpec {
    const char* name;
    int slot;  // packing index
};

// 31 coefficient integrals packed in one quadrature pass.
// layout: a(1..2,1..2)->0..3, b(0..2,0..2)->4..12, c(0..2,0..2)->13..21,
// f(0..1,0..1)->22..25, q(0..1,0..1)->26..29, t11->30
constexpr int kNumCoeffs = 31;

std::array<double, kNumCoeffs> coeff_level(const IntensityField& field, double half, int n,
                                           int threads) {
    double floor_cube = kCubeFloor * field.peak();
    return integrate_many<kNumCoeffs>(
        0.0, 0.0, half, n, threads, [&](double x, double y, std::array<double, kNumCoeffs>& acc) {
            double lam = field.value(x, y);
            if (lam < kPdfClip) return;
            double d[3][3];
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) d[i][j] = i == 0 && j == 0 ? lam : field.deriv(i, j, x, y);
            double inv = 1.0 / lam;
            int idx = 0;
            for (int i = 1; i < 3; ++i)
                for (int j = 1; j < 3; ++j) acc[idx++] += d[i][0] * d[0][j] * inv;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) acc[idx++] += d[i][j] * d[1][1] * inv;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) acc[idx++] += d[i][j] * d[i][j] * inv;
            if (lam > floor_cube) {
                double inv3 = inv * inv * inv;
                for (int i = 0; i < 2; ++i)
                    for (int j = 0; j < 2; ++j) {
                        double v = d[i][j] * d[i][j];
                        acc[idx++] += v * v * inv3;
                    }
                for (int i = 0; i < 2; ++i)
                    for (int j = 0; j < 2; ++j)
                        acc[idx++] += d[0][1] * d[1][0] * d[i][j] * d[i][j] * inv3;
                acc[idx++] += d[0][1] * d[0][1] * d[1][0] * d[1][0] * inv3;
            } else {
                idx += 9;
            }
        });
}

SmallRCoeffs unpack_coeffs(const std::array<double, kNumCoeffs>& v) {
    SmallRCoeffs out;
    int idx = 0;
    for (int i = 1; i < 3; ++i)
        for (int j = 1; j < 3; ++j) out.a[i][j] = v[idx++];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) out.b[i][j] = v[idx++];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) out.c[i][j] = v[idx++];
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) out.f[i][j] = v[idx++];
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) out.q[i][j] = v[idx++];
    out.t11 = v[idx++];
    return out;
}

const char* coeff_name(int idx) {
    static const char* names[kNumCoeffs] = {
        "a11", "a12", "a21", "a22", "b00", "b01", "b02", "b10", "b11", "b12", "b20",
        "b21", "b22", "c00", "c01", "c02", "c10", "c11", "c12", "c20", "c21", "c22",
        "f00", "f01", "f10", "f11", "q00", "q01", "q10", "q11", "t11"};
    return names[idx];
}

}  // namespace

SmallRCoeffs smallr_coeffs(const Psf& psf, int threads) {
    IntensityField field(psf);
    if (field.gaussian_backend()) {
        double half = field.support_half_extent();
        std::array<double, kNumCoeffs> prev{};
        for (int n : {512, 1024, 2048}) {
            std::array<double, kNumCoeffs> cur = coeff_level(field, half, n, threads);
            if (n != 512) {
                for (int k = 0; k < kNumCoeffs; ++k) {
                    double tol = kRefineTol * std::max(std::abs(cur[k]), 1.0);
                    require(std::abs(cur[k] - prev[k]) <= tol || n != 2048,
                            ErrorCode::nonconvergence,
                            std::string("small-r coefficient did not converge under refinement: ") +
                                coeff_name(k));
                }
                bool done = true;
                for (int k = 0; k < kNumCoeffs; ++k) {
                    if (std::abs(cur[k] - prev[k]) > kRefineTol * std::max(std::abs(cur[k]), 1.0))
                        done = false;
                }
                if (done) return unpack_coeffs(cur);
            }
            prev = cur;
        }
        throw Error(ErrorCode::nonconvergence,
                    "small-r coefficient quadrature did not converge under refinement");
    }
    const Grid2d& base = psf.grid().psi;
    double half = std::max(base.hx(), base.hy());
    int n = std::max(base.nx(), base.ny());
    std::array<double, kNumCoeffs> fine = coeff_level(field, half, n, threads);
    std::array<double, kNumCoeffs> coarse = coeff_level(field, half, n / 2, threads);
    for (int k = 0; k < kNumCoeffs; ++k) {
        require(std::abs(fine[k] - coarse[k]) <= 1e-3 * std::max(std::abs(fine[k]), 1.0),
                ErrorCode::nonconvergence,
                std::string("grid small-r coefficient did not converge: ") + coeff_name(k));
    }
    return unpack_coeffs(fine);
}

FisherMatrix cfim_smallr(const SmallRCoeffs& k, double r, double alpha, double epsilon) {
    double sa = std::sin(alpha), ca = std::cos(alpha);
    double s2a = std::sin(2.0 * alpha), c2a = std::cos(2.0 * alpha);
    double e = epsilon, e2 = epsilon * epsilon, e4 = e2 * e2;
    double r2 = r * r;

    FisherMatrix f;
    f.kind = FisherMatrix::Kind::classical;
    Eigen::Matrix4d& m = f.m;

    m(0, 0) = k.c[1][0] -
              r2 / 8.0 *
                  (k.a[2][2] * sa * sa + (2.0 * e2 + 1.0) * k.b[2][0] * s2a +
                   (2.0 * e2 + 1.0) * k.c[2][0] * ca * ca +
                   2.0 * e2 *
                       (sa * sa * (k.c[1][1] - k.t11) - ca * ca * k.f[1][0] - k.q[1][0] * s2a));
    m(1, 1) = k.c[0][1] -
              r2 / 8.0 *
                  (k.a[2][2] * ca * ca +
                   (2.0 * e2 + 1.0) * sa * (2.0 * k.b[0][2] * ca + k.c[0][2] * sa) +
                   2.0 * e2 * (ca * ca * (k.c[1][1] - k.t11) - k.q[0][1] * s2a - k.f[0][1] * sa * sa));
    m(2, 2) = e2 / 4.0 * (k.a[1][1] * s2a + k.c[0][1] * sa * sa + k.c[1][0] * ca * ca) +
              r2 / 64.0 *
                  ((2.0 - 5.0 * e2) * k.a[2][2] * s2a * s2a +
                   8.0 * e4 * s2a * (k.q[1][0] * ca * ca + k.q[0][1] * sa * sa) +
                   4.0 * (2.0 - 5.0 * e2) * s2a * (k.b[0][2] * sa * sa + k.b[2][0] * ca * ca) +
                   2.0 * (2.0 - 5.0 * e2) *
                       (k.c[1][1] * s2a * s2a + k.c[2][0] * ca * ca * ca * ca +
                        k.c[0][2] * sa * sa * sa * sa) +
                   4.0 * e4 * (k.f[0][1] * sa * sa * sa * sa + k.f[1][0] * ca * ca * ca * ca) +
                   6.0 * e4 * k.t11 * s2a * s2a);
    m(3, 3) = r2 * e2 / 4.0 * (k.c[1][0] * sa * sa + k.c[0][1] * ca * ca - k.a[1][1] * s2a);

    m(0, 1) = m(1, 0) =
        k.a[1][1] -
        r2 / 8.0 *
            ((2.0 * e2 + 1.0) * k.b[2][0] * ca * ca + (2.0 * e2 + 1.0) * k.b[0][2] * sa * sa -
             2.0 * e2 * (k.q[0][1] * sa * sa + k.q[1][0] * ca * ca) + e2 * k.a[2][2] * s2a +
             (e2 + 1.0) * k.c[1][1] * s2a - 2.0 * e2 * k.t11 * s2a);
    m(0, 2) = m(2, 0) =
        e / 2.0 * (k.c[1][0] * ca + k.a[1][1] * sa) -
        e * r2 / 16.0 *
            ((2.0 * e2 + 1.0) * k.a[2][2] * sa * sa * ca + (2.0 * e2 + 1.0) * k.b[0][2] * sa * sa * sa +
             3.0 * (2.0 * e2 + 1.0) * k.b[2][0] * sa * ca * ca +
             2.0 * (2.0 * e2 + 1.0) * k.c[1][1] * sa * sa * ca +
             (2.0 * e2 + 1.0) * k.c[2][0] * ca * ca * ca -
             2.0 * e2 *
                 (k.f[1][0] * ca * ca * ca + 3.0 * sa * ca * ca * k.q[1][0] +
                  k.q[0][1] * sa * sa * sa + 3.0 * k.t11 * sa * sa * ca));
    m(0, 3) = m(3, 0) = 0.5 * r * e * (k.a[1][1] * ca - k.c[1][0] * sa);
    m(1, 2) = m(2, 1) =
        0.5 * e * (k.a[1][1] * ca + k.c[0][1] * sa) -
        r2 * e / 16.0 *
            ((2.0 * e2 + 1.0) * k.a[2][2] * sa * ca * ca + (2.0 * e2 + 1.0) * k.b[2][0] * ca * ca * ca +
             3.0 * (2.0 * e2 + 1.0) * k.b[0][2] * sa * sa * ca +
             (2.0 * e2 + 1.0) * k.c[0][2] * sa * sa * sa +
             2.0 * (2.0 * e2 + 1.0) * k.c[1][1] * sa * ca * ca - 2.0 * e2 * k.f[0][1] * sa * sa * sa -
             2.0 * e2 * k.q[1][0] * ca * ca * ca - 6.0 * e2 * k.q[0][1] * sa * sa * ca -
             6.0 * e2 * k.t11 * sa * ca * ca);
    m(1, 3) = m(3, 1) = 0.5 * r * e * (k.c[0][1] * ca - k.a[1][1] * sa);
    m(2, 3) = m(3, 2) = r * e2 / 8.0 * (2.0 * k.a[1][1] * c2a + (k.c[0][1] - k.c[1][0]) * s2a);
    return f;
}

double direct_a_factor(const SmallRCoeffs& k, double alpha) {
    double sa = std::sin(alpha), ca = std::cos(alpha);
    double s2a = std::sin(2.0 * alpha);
    return 2.0 * k.a[2][2] * sa * sa * ca * ca + 2.0 * (k.b[2][0] * ca * ca + k.b[0][2] * sa * sa) * s2a +
           k.c[0][2] * sa * sa * sa * sa + k.c[1][1] * s2a * s2a + k.c[2][0] * ca * ca * ca * ca;
}

DirectPrecision precision_r_direct(const SceneParams& scene, const SmallRCoeffs& coeffs,
                                   double n_total) {
    require(std::abs(scene.epsilon) < 1.0, ErrorCode::validation,
            "|epsilon| = 1 leaves one source dark");
    DirectPrecision out;
    out.a_factor = direct_a_factor(coeffs, scene.alpha);
    double one_e2 = 1.0 - scene.epsilon * scene.epsilon;
    out.h_r_direct = kDirectPrefactor * scene.r * scene.r * one_e2 * one_e2 * n_total * out.a_factor;
    return out;
}

namespace {

class PhotonSampler {
public:
    PhotonSampler(const Psf& psf, const SceneParams& scene) : scene_(scene) {
        if (psf.is_gaussian()) {
            gaussian_ = true;
            const GaussianPsf& g = psf.gaussian();
            l11_ = g.sigma1;
            l21_ = g.beta * g.sigma2;
            l22_ = g.sigma2 * std::sqrt(1.0 - g.beta * g.beta);
        } else {
            gaussian_ = false;
            grid_ = &psf.grid().psi;
            int nx = grid_->nx(), ny = grid_->ny();
            row_cdf_.resize(ny);
            cell_cdf_.resize(static_cast<std::size_t>(nx) * ny);
            double total = 0.0;
            for (int iy = 0; iy < ny; ++iy) {
                double rowsum = 0.0;
                for (int ix = 0; ix < nx; ++ix) {
                    double v = grid_->at(ix, iy);
                    rowsum += v * v;
                    cell_cdf_[static_cast<std::size_t>(iy) * nx + ix] = rowsum;
                }
                if (rowsum > 0.0) {
                    for (int ix = 0; ix < nx; ++ix)
                        cell_cdf_[static_cast<std::size_t>(iy) * nx + ix] /= rowsum;
                }
                total += rowsum;
                row_cdf_[iy] = total;
            }
            for (double& v : row_cdf_) v /= total;
        }
    }

    void draw(Rng& rng, double& x, double& y) const {
        double w1 = 0.5 * (1.0 - scene_.epsilon);
        bool first = rng.next_double() < w1;
        Eigen::Vector2d center = first ? scene_.source1() : scene_.source2();
        if (gaussian_) {
            double z1 = rng.next_normal(), z2 = rng.next_normal();
            x = center.x() + l11_ * z1;
            y = center.y() + l21_ * z1 + l22_ * z2;
            return;
        }
        int nx = grid_->nx();
        double u1 = rng.next_double();
        int iy = static_cast<int>(std::lower_bound(row_cdf_.begin(), row_cdf_.end(), u1) -
                                  row_cdf_.begin());
        iy = std::min(iy, grid_->ny() - 1);
        const double* row = cell_cdf_.data() + static_cast<std::size_t>(iy) * nx;
        double u2 = rng.next_double();
        int ix = static_cast<int>(std::lower_bound(row, row + nx, u2) - row);
        ix = std::min(ix, nx - 1);
        x = center.x() + grid_->x(ix) + (rng.next_double() - 0.5) * grid_->dx();
        y = center.y() + grid_->y(iy) + (rng.next_double() - 0.5) * grid_->dy();
    }

private:
    SceneParams scene_;
    bool gaussian_ = true;
    double l11_ = 1.0, l21_ = 0.0, l22_ = 1.0;  // Cholesky factor of Sigma
    const Grid2d* grid_ = nullptr;
    std::vector<double> row_cdf_;
    std::vector<double> cell_cdf_;
};

}  // namespace

PhotonSample sample_photons(const Psf& psf, const SceneParams& scene, std::int64_t count,
                            std::uint64_t seed) {
    scene.validate(false);
    require(count >= 1, ErrorCode::validation, "photon count must be >= 1");
    PhotonSampler sampler(psf, scene);
    Rng rng(seed);
    PhotonSample out;
    out.seed = seed;
    out.scene = scene;
    out.x.resize(count);
    out.y.resize(count);
    for (std::int64_t i = 0; i < count; ++i) sampler.draw(rng, out.x[i], out.y[i]);
    return out;
}

namespace {

double log_likelihood(const IntensityField& field, const SceneParams& scene,
                      const PhotonSample& sample) {
    double acc = 0.0;
    for (std::size_t i = 0; i < sample.x.size(); ++i) {
        double p = photon_pdf(field, scene, sample.x[i], sample.y[i]);
        acc += std::log(std::max(p, kPdfClip));
    }
    return acc;
}

MleResult mle_fit_impl(const IntensityField& field, const PhotonSample& sample,
                       const SceneParams& init, const std::array<bool, 4>& free_mask,
                       double length_scale) {
    std::vector<int> free;
    for (int i = 0; i < 4; ++i)
        if (free_mask[i]) free.push_back(i);
    require(!free.empty(), ErrorCode::validation, "mle_fit needs at least one free parameter");
    require(!sample.x.empty(), ErrorCode::validation, "mle_fit needs a nonempty sample");

    int evals = 0;
    auto apply = [&](const std::vector<double>& theta) {
        SceneParams s = init;
        double* fields[4] = {&s.x_bar, &s.y_bar, &s.r, &s.alpha};
        for (std::size_t k = 0; k < free.size(); ++k) *fields[free[k]] = theta[k];
        s.r = std::abs(s.r);
        return s;
    };
    auto neg_loglik = [&](const std::vector<double>& theta) {
        ++evals;
        return -log_likelihood(field, apply(theta), sample);
    };

    // Nelder-Mead simplex
    std::size_t dim = free.size();
    std::vector<std::vector<double>> pts(dim + 1);
    std::vector<double> fv(dim + 1);
    std::vector<double> theta0(dim);
    const double* init_fields[4] = {&init.x_bar, &init.y_bar, &init.r, &init.alpha};
    for (std::size_t k = 0; k < dim; ++k) theta0[k] = *init_fields[free[k]];
    auto step_of = [&](int param) { return param == 3 ? 0.15 : 0.2 * length_scale; };
    for (std::size_t i = 0; i <= dim; ++i) {
        pts[i] = theta0;
        if (i > 0) pts[i][i - 1] += step_of(free[i - 1]);
        fv[i] = neg_loglik(pts[i]);
    }

    const int max_iter = 400;
    bool converged = false;
    for (int it = 0; it < max_iter; ++it) {
        // order
        std::vector<std::size_t> ord(dim + 1);
        for (std::size_t i = 0; i <= dim; ++i) ord[i] = i;
        std::sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        double fbest = fv[ord[0]], fworst = fv[ord[dim]];
        if (std::abs(fworst - fbest) <= 1e-9 * (std::abs(fbest) + 1.0)) {
            converged = true;
            break;
        }
        std::vector<double> centroid(dim, 0.0);
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t k = 0; k < dim; ++k) centroid[k] += pts[ord[i]][k] / dim;
        auto blend = [&](double t) {
            std::vector<double> p(dim);
            for (std::size_t k = 0; k < dim; ++k)
                p[k] = centroid[k] + t * (pts[ord[dim]][k] - centroid[k]);
            return p;
        };
        std::vector<double> refl = blend(-1.0);
        double frefl = neg_loglik(refl);
        if (frefl < fbest) {
            std::vector<double> expd = blend(-2.0);
            double fexp = neg_loglik(expd);
            if (fexp < frefl) {
                pts[ord[dim]] = expd;
                fv[ord[dim]] = fexp;
            } else {
                pts[ord[dim]] = refl;
                fv[ord[dim]] = frefl;
            }
        } else if (frefl < fv[ord[dim - 1]]) {
            pts[ord[dim]] = refl;
            fv[ord[dim]] = frefl;
        } else {
            std::vector<double> contr = blend(frefl < fworst ? -0.5 : 0.5);
            double fcon = neg_loglik(contr);
            if (fcon < std::min(frefl, fworst)) {
                pts[ord[dim]] = contr;
                fv[ord[dim]] = fcon;
            } else {
                for (std::size_t i = 1; i <= dim; ++i) {
                    for (std::size_t k = 0; k < dim; ++k)
                        pts[ord[i]][k] = 0.5 * (pts[ord[i]][k] + pts[ord[0]][k]);
                    fv[ord[i]] = neg_loglik(pts[ord[i]]);
                }
            }
        }
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i <= dim; ++i)
        if (fv[i] < fv[best]) best = i;
    std::vector<double> theta = pts[best];
    double fmin = fv[best];

    // coordinate-wise quadratic polish
    for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t k = 0; k < dim; ++k) {
            double delta = 1e-3 * step_of(free[k]);
            std::vector<double> tp = theta, tm = theta;
            tp[k] += delta;
            tm[k] -= delta;
            double fp = neg_loglik(tp), fm = neg_loglik(tm);
            double denom = fp - 2.0 * fmin + fm;
            if (denom <= 0.0) continue;
            double shift = 0.5 * delta * (fm - fp) / denom;
            shift = std::clamp(shift, -10.0 * delta, 10.0 * delta);
            std::vector<double> cand = theta;
            cand[k] += shift;
            double fc = neg_loglik(cand);
            if (fc < fmin) {
                theta = cand;
                fmin = fc;
            }
        }
    }

    MleResult out;
    out.estimate = apply(theta);
    out.loglik = -fmin;
    out.converged = converged;
    out.n_evals = evals;
    return out;
}

}  // namespace

MleResult mle_fit(const PhotonSample& sample, const Psf& psf, const SceneParams& init,
                  const std::array<bool, 4>& free_mask) {
    IntensityField field(psf);
    return mle_fit_impl(field, sample, init, free_mask, psf.length_scale());
}

std::vector<ExperimentRow> rayleigh_curse_experiment(const Psf& psf, double epsilon, double alpha,
                                                     const std::vector<double>& r_list,
                                                     std::int64_t n_photons, int trials,
                                                     std::uint64_t seed, int threads) {
    require(!r_list.empty(), ErrorCode::validation, "r_list must be nonempty");
    require(std::is_sorted(r_list.begin(), r_list.end()), ErrorCode::validation,
            "r_list must be sorted ascending");
    require(trials >= 2, ErrorCode::validation, "need at least 2 trials for a variance");

    IntensityField field(psf);
    std::vector<ExperimentRow> rows;
    rows.reserve(r_list.size());
    for (std::size_t ri = 0; ri < r_list.size(); ++ri) {
        SceneParams truth;
        truth.r = r_list[ri];
        truth.alpha = alpha;
        truth.epsilon = epsilon;
        truth.n_total = static_cast<double>(n_photons);
        truth.validate(true);

        FisherMatrix j = cfim_numeric(psf, truth, threads);
        DiagInverse inv = invert_diag(j.m, 2);
        ExperimentRow row;
        row.r = truth.r;
        row.crb_var = inv.value / static_cast<double>(n_photons);
        row.trials = trials;

        std::vector<double> estimates(trials);
        std::vector<int> ok(trials, 0);
        PhotonSampler sampler(psf, truth);
        parallel_for(trials, threads, [&](std::size_t t) {
            Rng rng(seed, (static_cast<std::uint64_t>(ri) << 32) | t);
            PhotonSample sample;
            sample.scene = truth;
            sample.seed = seed;
            sample.x.resize(n_photons);
            sample.y.resize(n_photons);
            for (std::int64_t i = 0; i < n_photons; ++i) sampler.draw(rng, sample.x[i], sample.y[i]);
            MleResult fit =
                mle_fit_impl(field, sample, truth, {false, false, true, false}, psf.length_scale());
            estimates[t] = fit.estimate.r;
            ok[t] = fit.converged ? 1 : 0;
        });

        double mean = 0.0;
        for (double v : estimates) mean += v;
        mean /= trials;
        double var = 0.0;
        for (double v : estimates) var += (v - mean) * (v - mean);
        row.empirical_var = var / (trials - 1);
        for (int v : ok) row.converged += v;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace qsr
