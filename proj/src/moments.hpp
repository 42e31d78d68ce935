#pragma once

#include "psf.hpp"

namespace qsr {

// Second moments of the momentum operators in the PSF state:
// kappa_x = <Px^2>, kappa_y = <Py^2>, eta = <Px Py>.
struct BaseMoments {
    double kappa_x = 0.0;
    double kappa_y = 0.0;
    double eta = 0.0;

    double det() const { return kappa_x * kappa_y - eta * eta; }
};

// Geometry-dependent quantities for a source pair at separation r, azimuth alpha:
// overlap delta = <psi1|psi2>, gamma_j = <Pj sin(r Pr)>, and the rotated second
// moments along/orthogonal to the displacement.
struct GeometryMoments {
    double delta = 1.0;
    double gamma_x = 0.0;
    double gamma_y = 0.0;
    double kappa_r = 0.0;
    double kappa_r_perp = 0.0;
    double r = 0.0;
    double alpha = 0.0;
};

BaseMoments base_moments(const Psf& psf, int threads = 1);
GeometryMoments geometry_moments(const Psf& psf, double r, double alpha, const BaseMoments& base,
                                 int threads = 1);

}  // namespace qsr
