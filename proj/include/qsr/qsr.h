/* qsr: quantum and classical precision limits for resolving two incoherent
 * point sources in a 2-D imaging system.
 *
 * C interface over the C++ core. All objects are opaque handles created and
 * destroyed through these functions; every call returns a status code and
 * the last failure message is retrievable per thread via qsr_last_error().
 *
 * Conventions: parameter order of all 4x4 Fisher matrices is
 * (X_bar, Y_bar, r, alpha), row-major in double[16]. Angles are radians.
 */
#ifndef QSR_QSR_H
#define QSR_QSR_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qsr_status {
    QSR_OK = 0,
    QSR_ERROR_VALIDATION = 1,
    QSR_ERROR_NONCONVERGENCE = 2,
    QSR_ERROR_VERIFICATION = 3,
    QSR_ERROR_INTERNAL = 4
} qsr_status;

typedef struct qsr_psf qsr_psf;

/* Scene: centroid, separation r >= 0, azimuth alpha, intensity imbalance
 * epsilon = (N2-N1)/(N2+N1), total photon budget n_total. */
typedef struct qsr_scene {
    double x_bar;
    double y_bar;
    double r;
    double alpha;
    double epsilon;
    double n_total;
} qsr_scene;

typedef struct qsr_base_moments {
    double kappa_x;
    double kappa_y;
    double eta;
} qsr_base_moments;

typedef struct qsr_geometry_moments {
    double delta;
    double gamma_x;
    double gamma_y;
    double kappa_r;
    double kappa_r_perp;
} qsr_geometry_moments;

typedef struct qsr_eigensystem {
    double lambda1; /* smaller eigenvalue of rho */
    double lambda2;
    double qnorm1; /* eigenstate normalization constants; valid only if */
    double qnorm2; /* eigenstates_defined != 0 (requires delta != 0)    */
    int eigenstates_defined;
} qsr_eigensystem;

typedef struct qsr_precision_report {
    qsr_base_moments base;
    qsr_geometry_moments geom;
    double h_r;            /* N/(Q^-1)_33, stable num/den route */
    double h_r_inverse;    /* matrix-inversion route, r > 0 only */
    double h_r_limit;      /* r -> 0 closed form */
    double h_alpha;        /* N/(Q^-1)_44; 0 at r = 0 */
    double h_alpha_smallr; /* leading r^2 term */
    double alpha_opt;
    double alpha_wor;
    double xi;
    double h_r_direct; /* small-r direct-imaging formula */
    double a_factor;
    double cond; /* condition number of the QFIM */
    int inverse_defined;
    int r_zero_degenerate;
    int azimuth_degenerate;
    int cond_warning; /* cond > 1e12 */
    int imbalance_warning;
} qsr_precision_report;

typedef struct qsr_azimuth_extrema {
    double alpha_opt;
    double alpha_wor;
    double h_opt;
    double h_wor;
    double xi;
    int degenerate;
} qsr_azimuth_extrema;

typedef struct qsr_oracle_result {
    double qfim[16];      /* Gram-subspace oracle at fd_step */
    double qfim_half[16]; /* same at fd_step/2, for noise estimation */
    double fd_step;
    double fd_error_estimate;
    double lambda1;
    double lambda2;
} qsr_oracle_result;

typedef struct qsr_experiment_row {
    double r;
    double empirical_var;
    double crb_var;
    int trials;
    int converged;
} qsr_experiment_row;

typedef struct qsr_mle_result {
    qsr_scene estimate;
    double loglik;
    int converged;
    int n_evals;
} qsr_mle_result;

/* Message for the most recent failing call on this thread. */
const char* qsr_last_error(void);

/* ---- PSF construction ---- */
qsr_status qsr_psf_create_gaussian(double sigma1, double sigma2, double beta, qsr_psf** out);
qsr_status qsr_psf_create_grid(const double* samples, int nx, int ny, double half_extent_x,
                               double half_extent_y, qsr_psf** out);
/* Text matrix file: "nx ny half_extent_x half_extent_y" then ny rows of nx
 * amplitudes (y increasing). */
qsr_status qsr_psf_load_grid(const char* path, qsr_psf** out);
qsr_status qsr_psf_rotate(const qsr_psf* psf, double theta, qsr_psf** out);
void qsr_psf_destroy(qsr_psf* psf);

/* ---- moments and spectra ---- */
qsr_status qsr_compute_base_moments(const qsr_psf* psf, int threads, qsr_base_moments* out);
qsr_status qsr_compute_geometry_moments(const qsr_psf* psf, double r, double alpha, int threads,
                                        qsr_geometry_moments* out);
qsr_status qsr_compute_eigensystem(double delta, double epsilon, qsr_eigensystem* out);

/* ---- Fisher matrices and precision limits ---- */
qsr_status qsr_compute_qfim(const qsr_psf* psf, const qsr_scene* scene, int threads,
                            double out[16]);
qsr_status qsr_compute_cfim_numeric(const qsr_psf* psf, const qsr_scene* scene, int threads,
                                    double out[16]);
qsr_status qsr_compute_cfim_smallr(const qsr_psf* psf, const qsr_scene* scene, int threads,
                                   double out[16]);
qsr_status qsr_compute_precision_report(const qsr_psf* psf, const qsr_scene* scene, int threads,
                                        qsr_precision_report* out);
qsr_status qsr_compute_azimuth_extrema(const qsr_psf* psf, double epsilon, double n_total,
                                       int threads, qsr_azimuth_extrema* out);
qsr_status qsr_precision_r_limit_at(const qsr_psf* psf, double alpha, double epsilon,
                                    double n_total, int threads, double* out);
qsr_status qsr_precision_alpha_at(const qsr_psf* psf, const qsr_scene* scene, int threads,
                                  double* h_alpha, int* degenerate);

/* ---- oracle verification ---- */
qsr_status qsr_oracle_qfim(const qsr_psf* psf, const qsr_scene* scene, double fd_step,
                           int threads, qsr_oracle_result* out);
qsr_status qsr_sld_residual(const qsr_psf* psf, const qsr_scene* scene, int threads, double* out);
/* Negative control: Gaussian amplitude with a cubic phase exp(i c x^3). */
qsr_status qsr_sld_residual_chirped(double sigma1, double sigma2, double beta, double chirp,
                                    const qsr_scene* scene, double* out);

/* ---- Monte Carlo ---- */
/* xy receives count interleaved pairs (x0, y0, x1, y1, ...). */
qsr_status qsr_sample_photons(const qsr_psf* psf, const qsr_scene* scene, long long count,
                              uint64_t seed, double* xy);
/* free_mask[4] selects which of (X_bar, Y_bar, r, alpha) are estimated. */
qsr_status qsr_mle_fit(const qsr_psf* psf, const qsr_scene* init, const double* xy,
                       long long count, const int free_mask[4], qsr_mle_result* out);
qsr_status qsr_rayleigh_experiment(const qsr_psf* psf, double epsilon, double alpha,
                                   const double* r_list, int n_r, long long n_photons, int trials,
                                   uint64_t seed, int threads, qsr_experiment_row* rows);

#ifdef __cplusplus
}
#endif

#endif /* QSR_QSR_H */
