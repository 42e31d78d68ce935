#pragma once

#include "azimuth.hpp"
#include "direct.hpp"
#include "oracle.hpp"

namespace qsr {

// Everything cmd_precision prints, assembled in one pass.
struct PrecisionReport {
    BaseMoments base;
    GeometryMoments geom;

    double h_r = 0.0;            // quantum distance precision N/(Q^-1)_33
    double h_r_inverse = 0.0;    // matrix-inversion route (r > 0)
    bool inverse_defined = false;
    double h_r_limit = 0.0;      // r -> 0 closed form
    double h_alpha = 0.0;        // azimuth precision N/(Q^-1)_44
    double h_alpha_smallr = 0.0; // leading r^2 term
    double alpha_opt = 0.0;
    double alpha_wor = 0.0;
    double xi = 1.0;
    double h_r_direct = 0.0;     // small-r direct-imaging formula
    double a_factor = 0.0;

    bool r_zero_degenerate = false;  // Q singular at r = 0; H_alpha = 0
    bool azimuth_degenerate = false;  // circular PSF
    double cond = 0.0;
    bool cond_warning = false;
    bool imbalance_warning = false;  // |epsilon| close to 1
};

PrecisionReport make_precision_report(const Psf& psf, const SceneParams& scene, int threads = 1);

}  // namespace qsr
