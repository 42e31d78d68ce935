#include "grid2d.hpp"

#include <cmath>

#include "parallel.hpp"

namespace qsr {

void Grid2d::fill(const std::function<double(double, double)>& f) {
    for (int iy = 0; iy < ny_; ++iy)
        for (int ix = 0; ix < nx_; ++ix) at(ix, iy) = f(x(ix), y(iy));
}

double Grid2d::integrate_cells(const std::function<double(int, int)>& fn, int threads) const {
    double w = cell_area();
    return w * parallel_row_sum(ny_, threads, [&](std::size_t iy) {
               double s = 0.0;
               for (int ix = 0; ix < nx_; ++ix) s += fn(ix, static_cast<int>(iy));
               return s;
           });
}

double Grid2d::integrate_cells_coarse(const std::function<double(int, int)>& fn) const {
    double s = 0.0;
    for (int iy = 0; iy < ny_; iy += 2) {
        for (int ix = 0; ix < nx_; ix += 2) s += fn(ix, iy);
    }
    return s * 4.0 * cell_area();
}

namespace {

// 4th-order first-derivative stencils in index units.
inline double d_central(const double* f, int i, int stride) {
    return (-f[(i + 2) * stride] + 8.0 * f[(i + 1) * stride] - 8.0 * f[(i - 1) * stride] +
            f[(i - 2) * stride]) /
           12.0;
}

inline double d_forward(const double* f, int i, int stride) {
    return (-25.0 * f[i * stride] + 48.0 * f[(i + 1) * stride] - 36.0 * f[(i + 2) * stride] +
            16.0 * f[(i + 3) * stride] - 3.0 * f[(i + 4) * stride]) /
           12.0;
}

inline double d_semi_forward(const double* f, int i, int stride) {
    return (-3.0 * f[(i - 1) * stride] - 10.0 * f[i * stride] + 18.0 * f[(i + 1) * stride] -
            6.0 * f[(i + 2) * stride] + f[(i + 3) * stride]) /
           12.0;
}

inline double d_index(const double* f, int i, int n, int stride) {
    if (i >= 2 && i <= n - 3) return d_central(f, i, stride);
    if (i == 0) return d_forward(f, i, stride);
    if (i == 1) return d_semi_forward(f, i, stride);
    if (i == n - 1) {
        // mirrored forward stencil
        return (25.0 * f[i * stride] - 48.0 * f[(i - 1) * stride] + 36.0 * f[(i - 2) * stride] -
                16.0 * f[(i - 3) * stride] + 3.0 * f[(i - 4) * stride]) /
               12.0;
    }
    // i == n - 2
    return (3.0 * f[(i + 1) * stride] + 10.0 * f[i * stride] - 18.0 * f[(i - 1) * stride] +
            6.0 * f[(i - 2) * stride] - f[(i - 3) * stride]) /
           12.0;
}

}  // namespace

Grid2d Grid2d::deriv_x() const {
    require(nx_ >= 5, ErrorCode::validation, "derivative needs at least 5 samples per row");
    Grid2d out(nx_, ny_, hx_, hy_);
    double inv_h = 1.0 / dx();
    for (int iy = 0; iy < ny_; ++iy) {
        const double* row = data_.data() + static_cast<std::size_t>(iy) * nx_;
        for (int ix = 0; ix < nx_; ++ix) out.at(ix, iy) = d_index(row, ix, nx_, 1) * inv_h;
    }
    return out;
}

Grid2d Grid2d::deriv_y() const {
    require(ny_ >= 5, ErrorCode::validation, "derivative needs at least 5 samples per column");
    Grid2d out(nx_, ny_, hx_, hy_);
    double inv_h = 1.0 / dy();
    for (int ix = 0; ix < nx_; ++ix) {
        const double* col = data_.data() + ix;
        for (int iy = 0; iy < ny_; ++iy) out.at(ix, iy) = d_index(col, iy, ny_, nx_) * inv_h;
    }
    return out;
}

double Grid2d::interp_row(const double* row, int ix, double u) const {
    // cubic Hermite between nodes ix and ix+1; slopes from 4th-order stencils
    double p0 = row[ix], p1 = row[ix + 1];
    double m0 = (-row[ix + 2] + 8.0 * row[ix + 1] - 8.0 * row[ix - 1] + row[ix - 2]) / 12.0;
    double m1 = (-row[ix + 3] + 8.0 * row[ix + 2] - 8.0 * row[ix] + row[ix - 1]) / 12.0;
    double u2 = u * u, u3 = u2 * u;
    return (2.0 * u3 - 3.0 * u2 + 1.0) * p0 + (u3 - 2.0 * u2 + u) * m0 +
           (-2.0 * u3 + 3.0 * u2) * p1 + (u3 - u2) * m1;
}

double Grid2d::interp(double x_pt, double y_pt) const {
    double fx = (x_pt + hx_) / dx() - 0.5;
    double fy = (y_pt + hy_) / dy() - 0.5;
    int ix = static_cast<int>(std::floor(fx));
    int iy = static_cast<int>(std::floor(fy));
    if (ix < 2 || ix > nx_ - 4 || iy < 2 || iy > ny_ - 4) return 0.0;
    double ux = fx - ix, uy = fy - iy;

    double col[6];
    for (int k = 0; k < 6; ++k) {
        const double* row = data_.data() + static_cast<std::size_t>(iy - 2 + k) * nx_;
        col[k] = interp_row(row, ix, ux);
    }
    // Hermite in y on the interpolated column (nodes col[2], col[3])
    double p0 = col[2], p1 = col[3];
    double m0 = (-col[4] + 8.0 * col[3] - 8.0 * col[1] + col[0]) / 12.0;
    double m1 = (-col[5] + 8.0 * col[4] - 8.0 * col[2] + col[1]) / 12.0;
    double u2 = uy * uy, u3 = u2 * uy;
    return (2.0 * u3 - 3.0 * u2 + 1.0) * p0 + (u3 - 2.0 * u2 + uy) * m0 +
           (-2.0 * u3 + 3.0 * u2) * p1 + (u3 - u2) * m1;
}

double Grid2d::max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace qsr
