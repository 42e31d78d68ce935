#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "moments.hpp"
#include "psf.hpp"

using namespace qsr;

namespace {

std::vector<double> sample_gaussian(const Psf& g, int n, double half) {
    Grid2d proto(n, n, half, half);
    std::vector<double> s(static_cast<std::size_t>(n) * n);
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix)
            s[static_cast<std::size_t>(iy) * n + ix] = g.amplitude(proto.x(ix), proto.y(iy));
    return s;
}

}  // namespace

TEST_CASE("gaussian construction and amplitude") {
    Psf g = make_gaussian(1.0, 1.0, 0.0);
    CHECK(g.amplitude(0.0, 0.0) == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)).epsilon(1e-12));

    CHECK_THROWS_AS(make_gaussian(1.0, 1.0, 1.0), Error);
    CHECK_THROWS_AS(make_gaussian(1.0, 1.0, -1.2), Error);
    CHECK_THROWS_AS(make_gaussian(0.0, 1.0, 0.0), Error);
    CHECK_THROWS_AS(make_gaussian(1.0, -0.3, 0.0), Error);

    // Fig. 3 parameters are a valid PSF
    CHECK_NOTHROW(make_gaussian(1.0, 1.4, 0.4));
}

TEST_CASE("grid construction validates norm, symmetry, boundary") {
    Psf g = make_gaussian(1.0, 1.0, 0.0);
    auto samples = sample_gaussian(g, 256, 8.0);
    Psf grid = make_grid(samples, 256, 256, 8.0, 8.0);
    double norm2 = grid.grid().psi.integrate_cells(
        [&](int ix, int iy) { return grid.grid().psi.at(ix, iy) * grid.grid().psi.at(ix, iy); });
    CHECK(norm2 == doctest::Approx(1.0).epsilon(1e-10));

    SUBCASE("asymmetric samples rejected") {
        auto bad = samples;
        bad[40 * 256 + 7] += 1e-3;
        CHECK_THROWS_WITH_AS(make_grid(bad, 256, 256, 8.0, 8.0),
                             doctest::Contains("inversion symmetry"), Error);
    }
    SUBCASE("peak at boundary rejected") {
        std::vector<double> bad(256 * 256, 0.0);
        // inversion-symmetric ring concentrated at the domain edge
        for (int ix = 0; ix < 256; ++ix) {
            bad[ix] = 1.0;
            bad[255 * 256 + (255 - ix)] = 1.0;
        }
        CHECK_THROWS_WITH_AS(make_grid(bad, 256, 256, 8.0, 8.0), doctest::Contains("boundary"),
                             Error);
    }
    SUBCASE("all-zero samples rejected") {
        std::vector<double> zero(256 * 256, 0.0);
        CHECK_THROWS_WITH_AS(make_grid(zero, 256, 256, 8.0, 8.0),
                             doctest::Contains("normalizable"), Error);
    }
    SUBCASE("too-small grids rejected") {
        std::vector<double> tiny(8 * 8, 1.0);
        CHECK_THROWS_AS(make_grid(tiny, 8, 8, 8.0, 8.0), Error);
    }
}

TEST_CASE("grid file round trip and malformed files") {
    Psf g = make_gaussian(1.0, 1.0, 0.0);
    const int n = 128;
    auto samples = sample_gaussian(g, n, 8.0);

    std::string path = "psf_roundtrip.txt";
    {
        std::ofstream out(path);
        out.precision(17);
        out << n << " " << n << " 8.0 8.0\n";
        for (int iy = 0; iy < n; ++iy) {
            for (int ix = 0; ix < n; ++ix)
                out << (ix ? " " : "") << std::scientific << samples[iy * n + ix];
            out << "\n";
        }
    }
    Psf loaded = load_grid_psf(path);
    BaseMoments b = base_moments(loaded);
    CHECK(b.kappa_x == doctest::Approx(0.25).epsilon(1e-5));

    SUBCASE("missing file") { CHECK_THROWS_AS(load_grid_psf("no_such_file.txt"), Error); }
    SUBCASE("bad header") {
        std::ofstream out("psf_bad_header.txt");
        out << "64 x\n";
        out.close();
        CHECK_THROWS_WITH_AS(load_grid_psf("psf_bad_header.txt"), doctest::Contains("line 1"),
                             Error);
    }
    SUBCASE("missing rows") {
        std::ofstream out("psf_missing_row.txt");
        out << "16 16 8 8\n1 2 3\n";
        out.close();
        CHECK_THROWS_WITH_AS(load_grid_psf("psf_missing_row.txt"), doctest::Contains("line 2"),
                             Error);
    }
}

TEST_CASE("rotation") {
    SUBCASE("circular gaussian is rotation invariant") {
        Psf g = make_gaussian(1.0, 1.0, 0.0);
        Psf r = rotate(g, 0.9);
        CHECK(r.gaussian().sigma1 == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(r.gaussian().sigma2 == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(r.gaussian().beta == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("zero rotation is the identity") {
        Psf g = make_gaussian(1.0, 1.4, 0.4);
        Psf r = rotate(g, 0.0);
        CHECK(r.gaussian().sigma1 == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(r.gaussian().sigma2 == doctest::Approx(1.4).epsilon(1e-14));
        CHECK(r.gaussian().beta == doctest::Approx(0.4).epsilon(1e-14));
    }
    SUBCASE("det of the moment matrix is rotation invariant") {
        Psf g = make_gaussian(1.0, 1.4, 0.4);
        BaseMoments b0 = base_moments(g);
        BaseMoments b1 = base_moments(rotate(g, 0.7));
        CHECK(b1.det() == doctest::Approx(b0.det()).epsilon(1e-9));
    }
    SUBCASE("grid rotation matches rotated analytic moments") {
        Psf g = make_gaussian(1.0, 1.4, 0.4);
        Psf grid = make_grid(sample_gaussian(g, 384, 8.0 * 1.4), 384, 384, 8.0 * 1.4, 8.0 * 1.4);
        Psf grid_rot = rotate(grid, 0.6);
        BaseMoments want = base_moments(rotate(g, 0.6));
        BaseMoments got = base_moments(grid_rot);
        CHECK(got.kappa_x == doctest::Approx(want.kappa_x).epsilon(1e-5));
        CHECK(got.kappa_y == doctest::Approx(want.kappa_y).epsilon(1e-5));
        CHECK(got.eta == doctest::Approx(want.eta).epsilon(1e-4));
    }
}

TEST_CASE("grid overlap guards against shifts outside the domain") {
    Psf g = make_gaussian(1.0, 1.0, 0.0);
    Psf grid = make_grid(sample_gaussian(g, 128, 8.0), 128, 128, 8.0, 8.0);
    CHECK_THROWS_WITH_AS(grid.overlap(9.0, 0.0), doctest::Contains("domain support"), Error);
    CHECK_NOTHROW(grid.overlap(1.0, 0.5));
}
