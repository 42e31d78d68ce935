#include "report.hpp"

#include <cmath>

namespace qsr {

PrecisionReport make_precision_report(const Psf& psf, const SceneParams& scene, int threads) {
    scene.validate(true);
    PrecisionReport rep;
    rep.base = base_moments(psf, threads);
    rep.geom = geometry_moments(psf, scene.r, scene.alpha, rep.base, threads);

    PrecisionR hr = precision_r(rep.base, rep.geom, scene.epsilon, scene.n_total);
    rep.h_r = hr.value;
    rep.h_r_inverse = hr.value_inverse;
    rep.inverse_defined = hr.inverse_defined;
    rep.cond = hr.cond;
    rep.cond_warning = hr.cond_warning;
    rep.r_zero_degenerate = hr.at_r_zero;

    PrecisionAlpha ha = precision_alpha(rep.base, rep.geom, scene.epsilon, scene.n_total);
    rep.h_alpha = ha.value;

    rep.h_r_limit = precision_r_limit(rep.base, scene.alpha, scene.epsilon, scene.n_total);
    rep.h_alpha_smallr = precision_alpha_smallr(rep.base, scene.r, scene.alpha, scene.epsilon,
                                                scene.n_total);

    AzimuthExtrema ext = optimal_azimuth(rep.base, scene.epsilon, scene.n_total);
    rep.alpha_opt = ext.alpha_opt;
    rep.alpha_wor = ext.alpha_wor;
    rep.xi = ext.xi;
    rep.azimuth_degenerate = ext.degenerate;

    SmallRCoeffs coeffs = smallr_coeffs(psf, threads);
    DirectPrecision direct = precision_r_direct(scene, coeffs, scene.n_total);
    rep.h_r_direct = direct.h_r_direct;
    rep.a_factor = direct.a_factor;

    rep.imbalance_warning = std::abs(scene.epsilon) >= 0.9;
    return rep;
}

}  // namespace qsr
