#include "qsr/qsr.h"

#include <cstring>
#include <string>

#include "report.hpp"

struct qsr_psf {
    qsr::Psf psf;
};

namespace {

thread_local std::string g_last_error;

template <typename Fn>
qsr_status wrap(Fn&& fn) {
    try {
        fn();
        return QSR_OK;
    } catch (const qsr::Error& e) {
        g_last_error = e.what();
        switch (e.code()) {
            case qsr::ErrorCode::validation:
                return QSR_ERROR_VALIDATION;
            case qsr::ErrorCode::nonconvergence:
                return QSR_ERROR_NONCONVERGENCE;
            case qsr::ErrorCode::verification:
                return QSR_ERROR_VERIFICATION;
        }
        return QSR_ERROR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return QSR_ERROR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return QSR_ERROR_INTERNAL;
    }
}

qsr::SceneParams to_scene(const qsr_scene& s) {
    qsr::SceneParams out;
    out.x_bar = s.x_bar;
    out.y_bar = s.y_bar;
    out.r = s.r;
    out.alpha = s.alpha;
    out.epsilon = s.epsilon;
    out.n_total = s.n_total;
    return out;
}

qsr_scene from_scene(const qsr::SceneParams& s) {
    return {s.x_bar, s.y_bar, s.r, s.alpha, s.epsilon, s.n_total};
}

void copy_matrix(const Eigen::Matrix4d& m, double out[16]) {
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) out[4 * i + j] = m(i, j);
}

void check_ptr(const void* p, const char* what) {
    qsr::require(p != nullptr, qsr::ErrorCode::validation, std::string(what) + " must not be null");
}

}  // namespace

extern "C" {

const char* qsr_last_error(void) { return g_last_error.c_str(); }

qsr_status qsr_psf_create_gaussian(double sigma1, double sigma2, double beta, qsr_psf** out) {
    return wrap([&] {
        check_ptr(out, "out");
        *out = new qsr_psf{qsr::make_gaussian(sigma1, sigma2, beta)};
    });
}

qsr_status qsr_psf_create_grid(const double* samples, int nx, int ny, double half_extent_x,
                               double half_extent_y, qsr_psf** out) {
    return wrap([&] {
        check_ptr(samples, "samples");
        check_ptr(out, "out");
        std::vector<double> data(samples, samples + static_cast<std::size_t>(nx) * ny);
        *out = new qsr_psf{qsr::make_grid(std::move(data), nx, ny, half_extent_x, half_extent_y)};
    });
}

qsr_status qsr_psf_load_grid(const char* path, qsr_psf** out) {
    return wrap([&] {
        check_ptr(path, "path");
        check_ptr(out, "out");
        *out = new qsr_psf{qsr::load_grid_psf(path)};
    });
}

qsr_status qsr_psf_rotate(const qsr_psf* psf, double theta, qsr_psf** out) {
    return wrap([&] {
        check_ptr(psf, "psf");
        check_ptr(out, "out");
        *out = new qsr_psf{qsr::rotate(psf->psf, theta)};
    });
}

void qsr_psf_destroy(qsr_psf* psf) { delete psf; }

qsr_status qsr_compute_base_moments(const qsr_psf* psf, int threads, qsr_base_moments* out) {
    return wrap([&] {
        check_ptr(psf, "psf");
        check_ptr(out, "out");
        qsr::BaseMoments b = qsr::base_moments(psf->psf, threads);
        *out = {b.kappa_x, b.kappa_y, b.eta};
    });
}

qsr_status qsr_compute_geometry_moments(const qsr_psf* psf, double r, double alpha, int threads,
                                        qsr_geometry_moments* out) {
    return wrap([&] {
        check_ptr(psf, "psf");
        check_ptr(out, "out");
        qsr::BaseMoments b = qsr::base_moments(psf->psf, threads);
        qsr::GeometryMoments g = qsr::geometry_moments(psf->psf, r, alpha, b, threads);
        *out = {g.delta, g.gamma_x, g.gamma_y, g.kappa_r, g.kappa_r_perp};
    });
}

qsr_status qsr_compute_eigensystem(double delta, double epsilon, qsr_eigensystem* out) {
    return wrap([&] {
        check_ptr(out, "out");
        qsr::EigenSystem e = qsr::eigensystem(delta, epsilon);
        *out = {e.lambda1, e.lambda2, e.qnorm1, e.qnorm2, e.eigenstates_defined ? 1 : 0};
    });
}

qsr_status qsr_compute_qfim(const qsr_psf* psf, const qsr_scene* scene, int threads,
                            double out[16]) {
    return wrap([&] {
        check_ptr(psf, "psf");
        check_ptr(scene, "scene");
        check_ptr(out, "out");
        qsr::SceneParams s = to_scene(*scene);
        s.validate(false);
        qsr::BaseMoments b = qsr::base_moments(psf->psf, threads);
        qsr::GeometryMoments g = qsr::geometry_moments(psf->psf, s.r, s.alpha, b, threads);
        copy_matrix(qsr::build_qfim(b, g, s.epsilon).m, out);
    });
}

qsr_status qsr_compute_cfim_numeric(const qsr_psf* psf, const qsr_scene* scene, int threads,
                                    double out[16]) {
    return wrap([&] {
        check_ptr(psf, "psf");
        check_ptr(scene, "scene");
        check_ptr(out, "out");
        copy_matrix(qsr::cfim_numeric(psf->psf, to_scene(*scene), threads).m, out);
    });
}

qsr_status qsr_compute_cfim_smallr(const qsr_psf* psf, const qsr_scene* scene, int threads,
                                   double out[16]) {
    return wrap([&] {
        check_ptr(psf, "psf");
        check_ptr(scene, "scene");
        check_ptr(out, "out");
        qsr::SceneParams s = to_scene(*scene);
        qsr::SmallRCoeffs k = qsr::smallr_coeffs(psf->psf, threads);
        copy_matrix(qsr::cfim_smallr(k, s.r, s.alpha, s.epsilon).m, out);
    });
}

qsr_status qsr_compute_precision_report(const qsr_psf* psf, const qsr_scene* scene, int threads,
                                        qsr_precision_report* out) {
    return wrap([&] {
        check_ptr(psf, "psf");
        check_ptr(scene, "scene");
        check_ptr(out, "out");
        qsr::PrecisionReport r = qsr::make_precision_report(psf->psf, to_scene(*scene), threads);
        out->base = {r.base.kappa_x, r.base.kappa_y, r.base.eta};
        out->geom = {r.geom.delta, r.geom.gamma_x, r.geom.gamma_y, r.geom.kappa_r,
                     r.geom.kappa_r_perp};
        out->h_r = r.h_r;
        out->h_r_inverse = r.h_r_inverse;
        out->h_r_limit = r.h_r_limit;
        out->h_alpha = r.h_alpha;
        out->h_alpha_smallr = r.h_alpha_smallr;
        out->alpha_opt = r.alpha_opt;
        out->alpha_wor = r.alpha_wor;
        out->xi = r.xi;
        out->h_r_direct = r.h_r_direct;
        out->a_factor = r.a_factor;
        out->cond = r.cond;
        out->inverse_defined = r.inverse_defined ? 1 : 0;
        out->r_zero_degenerate = r.r_zero_degenerate ? 1 : 0;
        out->azimuth_degenerate = r.azimuth_degenerate ? 1 : 0;
        out->cond_warning = r.cond_warning ? 1 : 0;
        out->imbalance_warning = r.imbalance_warning ? 1 : 0;
    });
}

qsr_status qsr_compute_azimuth_extrema(const qsr_psf* psf, double epsilon, double n_total,
                                       int threads, qsr_azimuth_extrema* out) {
    return wrap([&] {
        check_ptr(psf, "psf");
        check_ptr(out, "out");
        qsr::BaseMoments b = qsr::base_moments(psf->psf, threads);
        qsr::AzimuthExtrema e = qsr::optimal_azimuth(b, epsilon, n_total);
        *out = {e.alpha_opt, e.alpha_wor, e.h_opt, e.h_wor, e.xi, e.degenerate ? 1 : 0};
    });
}

qsr_status qsr_precision_r_limit_at(const qsr_psf* psf, double alpha, double epsilon,
                                    double n_total, int threads, double* out) {
    return wrap([&] {
        check_ptr(psf, "psf");
        check_ptr(out, "out");
        qsr::BaseMoments b = qsr::base_moments(psf->psf, threads);
        *out = qsr::precision_r_limit(b, alpha, epsilon, n_total);
    });
}

qsr_status qsr_precision_alpha_at(const qsr_psf* psf, const qsr_scene* scene, int threads,
                                  double* h_alpha, int* degenerate) {
    return wrap([&] {
        check_ptr(psf, "psf");
        check_ptr(scene, "scene");
        check_ptr(h_alpha, "h_alpha");
        qsr::SceneParams s = to_scene(*scene);
        s.validate(true);
        qsr::BaseMoments b = qsr::base_moments(psf->psf, threads);
        qsr::GeometryMoments g = qsr::geometry_moments(psf->psf, s.r, s.alpha, b, threads);
        qsr::PrecisionAlpha pa = qsr::precision_alpha(b, g, s.epsilon, s.n_total);
        *h_alpha = pa.value;
        if (degenerate) *degenerate = pa.degenerate ? 1 : 0;
    });
}

qsr_status qsr_oracle_qfim(const qsr_psf* psf, const qsr_scene* scene, double fd_step,
                           int threads, qsr_oracle_result* out) {
    return wrap([&] {
        check_ptr(psf, "psf");
        check_ptr(scene, "scene");
        check_ptr(out, "out");
        auto family = qsr::make_psf_family(psf->psf, threads);
        qsr::OracleQfim o = qsr::qfim_oracle(*family, to_scene(*scene), fd_step);
        copy_matrix(o.qfim, out->qfim);
        copy_matrix(o.qfim_half, out->qfim_half);
        out->fd_step = o.fd_step;
        out->fd_error_estimate = o.fd_error_estimate;
        out->lambda1 = o.lambda1;
        out->lambda2 = o.lambda2;
    });
}

qsr_status qsr_sld_residual(const qsr_psf* psf, const qsr_scene* scene, int threads, double* out) {
    return wrap([&] {
        check_ptr(psf, "psf");
        check_ptr(scene, "scene");
        check_ptr(out, "out");
        *out = qsr::sld_residual(psf->psf, to_scene(*scene), threads);
    });
}

qsr_status qsr_sld_residual_chirped(double sigma1, double sigma2, double beta, double chirp,
                                    const qsr_scene* scene, double* out) {
    return wrap([&] {
        check_ptr(scene, "scene");
        check_ptr(out, "out");
        qsr::Psf psf = qsr::make_gaussian(sigma1, sigma2, beta);
        auto family = qsr::make_chirped_gaussian_family(psf.gaussian(), chirp);
        *out = qsr::sld_matrices(*family, to_scene(*scene)).compatibility_residual();
    });
}

qsr_status qsr_sample_photons(const qsr_psf* psf, const qsr_scene* scene, long long count,
                              uint64_t seed, double* xy) {
    return wrap([&] {
        check_ptr(psf, "psf");
        check_ptr(scene, "scene");
        check_ptr(xy, "xy");
        qsr::PhotonSample s = qsr::sample_photons(psf->psf, to_scene(*scene), count, seed);
        for (long long i = 0; i < count; ++i) {
            xy[2 * i] = s.x[i];
            xy[2 * i + 1] = s.y[i];
        }
    });
}

qsr_status qsr_mle_fit(const qsr_psf* psf, const qsr_scene* init, const double* xy,
                       long long count, const int free_mask[4], qsr_mle_result* out) {
    return wrap([&] {
        check_ptr(psf, "psf");
        check_ptr(init, "init");
        check_ptr(xy, "xy");
        check_ptr(free_mask, "free_mask");
        check_ptr(out, "out");
        qsr::PhotonSample sample;
        sample.scene = to_scene(*init);
        sample.x.resize(count);
        sample.y.resize(count);
        for (long long i = 0; i < count; ++i) {
            sample.x[i] = xy[2 * i];
            sample.y[i] = xy[2 * i + 1];
        }
        std::array<bool, 4> mask = {free_mask[0] != 0, free_mask[1] != 0, free_mask[2] != 0,
                                    free_mask[3] != 0};
        qsr::MleResult r = qsr::mle_fit(sample, psf->psf, to_scene(*init), mask);
        out->estimate = from_scene(r.estimate);
        out->loglik = r.loglik;
        out->converged = r.converged ? 1 : 0;
        out->n_evals = r.n_evals;
    });
}

qsr_status qsr_rayleigh_experiment(const qsr_psf* psf, double epsilon, double alpha,
                                   const double* r_list, int n_r, long long n_photons, int trials,
                                   uint64_t seed, int threads, qsr_experiment_row* rows) {
    return wrap([&] {
        check_ptr(psf, "psf");
        check_ptr(r_list, "r_list");
        check_ptr(rows, "rows");
        std::vector<double> rv(r_list, r_list + n_r);
        auto result =
            qsr::rayleigh_curse_experiment(psf->psf, epsilon, alpha, rv, n_photons, trials, seed, threads);
        for (int i = 0; i < n_r; ++i) {
            rows[i] = {result[i].r, result[i].empirical_var, result[i].crb_var, result[i].trials,
                       result[i].converged};
        }
    });
}

}  // extern "C"
