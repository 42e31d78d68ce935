#pragma once

#include <vector>

#include "moments.hpp"

namespace qsr {

// Extrema of the r -> 0 distance precision over the relative azimuth.
struct AzimuthExtrema {
    double alpha_opt = 0.0;  // in [0, pi)
    double alpha_wor = 0.0;
    double h_opt = 0.0;
    double h_wor = 0.0;
    double xi = 1.0;           // h_opt / h_wor
    bool degenerate = false;   // circularly symmetric PSF: all azimuths equal
};

// Principal-axis angles of a Gaussian PSF covariance, reduced to [0, pi).
// phi_plus is the major axis, phi_minus the minor axis.
struct GaussianAxes {
    double phi_plus = 0.0;
    double phi_minus = 0.0;
    bool defined = true;  // false for the isotropic case
};

AzimuthExtrema optimal_azimuth(const BaseMoments& base, double epsilon, double n_total);
GaussianAxes gaussian_axes(const GaussianPsf& psf);
double enhancement_ratio(const BaseMoments& base);

struct AlphaSample {
    double alpha;
    double h_r_limit;
};
std::vector<AlphaSample> scan_alpha(const BaseMoments& base, double epsilon, double n_total,
                                    int n_points);

// wrap an angle into [0, pi)
double wrap_half_turn(double angle);

}  // namespace qsr
