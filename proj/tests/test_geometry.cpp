#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "nlma/builders.hpp"
#include "nlma/geometry.hpp"
#include "nlma/grid_io.hpp"

using namespace nlma;

namespace {

// Lower hull of (x_i, v_i) by brute force: min over chords through x_i.
std::vector<double> envelope_1d(const Grid& g, const std::vector<double>& v) {
    const int n = g.n[0];
    std::vector<double> out(v);
    for (int i = 0; i < n; ++i)
        for (int a = 0; a <= i; ++a)
            for (int b = i; b < n; ++b) {
                if (a == b) continue;
                const double t = double(i - a) / double(b - a);
                out[i] = std::min(out[i], (1 - t) * v[a] + t * v[b]);
            }
    return out;
}

// Same in 2D over all node triangles containing the point.
std::vector<double> envelope_2d(const Grid& g, const std::vector<double>& v) {
    std::vector<double> out(v);
    const std::size_t N = g.size();
    for (std::size_t p = 0; p < N; ++p) {
        const Vec x = g.coord(p);
        for (std::size_t a = 0; a < N; ++a)
            for (std::size_t b = a + 1; b < N; ++b)
                for (std::size_t c = b + 1; c < N; ++c) {
                    Vec A = g.coord(a), B = g.coord(b), C = g.coord(c);
                    const double det = (B[0] - A[0]) * (C[1] - A[1]) - (C[0] - A[0]) * (B[1] - A[1]);
                    if (std::abs(det) < 1e-12) continue;
                    const double l1 = ((x[0] - A[0]) * (C[1] - A[1]) - (C[0] - A[0]) * (x[1] - A[1])) / det;
                    const double l2 = ((B[0] - A[0]) * (x[1] - A[1]) - (x[0] - A[0]) * (B[1] - A[1])) / det;
                    const double l0 = 1 - l1 - l2;
                    if (l0 < -1e-12 || l1 < -1e-12 || l2 < -1e-12) continue;
                    out[p] = std::min(out[p], l0 * v[a] + l1 * v[b] + l2 * v[c]);
                }
    }
    return out;
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("grid spacing and node placement") {
    auto g = Grid::with_spacing(1, 2.0, 0.5);
    CHECK(g.n[0] == 9);
    CHECK(g.coord(std::size_t(4))[0] == doctest::Approx(0.0));
    auto g2 = Grid::make(2, 5, 1.0);
    CHECK(g2.size() == 25);
    CHECK(g2.h == doctest::Approx(0.5));
    CHECK(g2.nearest({0.1, -0.1, 0}) == g2.index({2, 2, 0}));
    CHECK_THROWS_AS(g2.nearest({3.0, 0, 0}), ValidationError);
}

TEST_CASE("convex envelope matches brute force in 1D") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-1, 1);
    auto g = Grid::make(1, 41, 2.0);
    for (int rep = 0; rep < 5; ++rep) {
        std::vector<double> v(g.size());
        for (std::size_t k = 0; k < v.size(); ++k) v[k] = g.coord(k)[0] * g.coord(k)[0] + 0.5 * U(rng);
        auto f = make_affine(g, {0, 0, 0}, 0.0).with_values(v);
        auto env = convex_envelope(f);
        auto ref = envelope_1d(g, v);
        for (std::size_t k = 0; k < v.size(); ++k) CHECK(env[k] == doctest::Approx(ref[k]).epsilon(1e-12));
    }
}

TEST_CASE("convex envelope matches brute force in 2D") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> U(-1, 1);
    auto g = Grid::make(2, 6, 1.0);
    for (int rep = 0; rep < 3; ++rep) {
        std::vector<double> v(g.size());
        for (std::size_t k = 0; k < v.size(); ++k) v[k] = dot(g.coord(k), g.coord(k)) + 0.3 * U(rng);
        auto f = make_affine(g, {0, 0, 0}, 0.0).with_values(v);
        auto env = convex_envelope(f);
        auto ref = envelope_2d(g, v);
        for (std::size_t k = 0; k < v.size(); ++k) CHECK(env[k] == doctest::Approx(ref[k]).epsilon(1e-10));
    }
}

TEST_CASE("envelope keeps convex data and is idempotent") {
    auto f = make_smooth_cone(Grid::with_spacing(2, 2.0, 0.1), 1.0, identity_mat());
    auto env = convex_envelope(f);
    CHECK(env.values() == f.values());
    auto g = Grid::make(1, 33, 1.0);
    std::vector<double> v(g.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = std::cos(4 * g.coord(k)[0]);
    auto e1 = convex_envelope(make_affine(g, {0, 0, 0}, 0).with_values(v));
    auto e2 = convex_envelope(e1);
    CHECK(e1.values() == e2.values());
    for (std::size_t k = 0; k < v.size(); ++k) CHECK(e1[k] <= v[k]);
    CHECK(e1.midpoint_defect() <= 1e-12);
}

TEST_CASE("subdifferential of the smooth cone at its vertex is a point") {
    DomainParams dp;
    dp.dim = 2;
    dp.L = 4;
    dp.h = 0.1;
    auto f = build_grid_function(BuilderSpec::parse("smoothcone:a=1"), dp);
    auto sd = subdifferential_at(f, f.grid().nearest({0, 0, 0}));
    REQUIRE_FALSE(sd.empty());
    CHECK(sd.diameter() < 1e-8);
    for (const auto& v : sd.vertices) CHECK(norm(v) < 1e-8);
}

TEST_CASE("subdifferential of |y| at 0 is [-1, 1] up to O(h)") {
    DomainParams dp;
    dp.L = 4;
    dp.h = 0.05;
    auto f = build_grid_function(BuilderSpec::parse("maxplanes:p=1,-1,r=0"), dp);
    auto sd = subdifferential_at(f, f.grid().nearest({0, 0, 0}));
    REQUIRE(sd.vertices.size() == 2);
    double lo = std::min(sd.vertices[0][0], sd.vertices[1][0]);
    double hi = std::max(sd.vertices[0][0], sd.vertices[1][0]);
    CHECK(lo == doctest::Approx(-1).epsilon(dp.h));
    CHECK(hi == doctest::Approx(1).epsilon(dp.h));
    CHECK(sd.full_dimensional);
}

TEST_CASE("supporting plane check returns a witness for concave data") {
    DomainParams dp;
    dp.L = 4;
    dp.h = 0.05;
    auto f = build_grid_function(BuilderSpec::parse("negcone:a=1"), dp);
    auto pc = supporting_plane_check(f, f.grid().nearest({0.5, 0, 0}));
    CHECK_FALSE(pc.supported);
    CHECK(pc.defect < 0);
    const Vec x = f.grid().coord(f.grid().nearest({0.5, 0, 0}));
    const Vec y = add(x, pc.witness);
    CHECK(f.eval(y) < f.eval(x) + dot(pc.witness, pc.gradient));
    auto cone = build_grid_function(BuilderSpec::parse("smoothcone:a=1"), dp);
    CHECK(supporting_plane_check(cone, cone.grid().nearest({0.5, 0, 0})).supported);
}

TEST_CASE("builder spec grammar") {
    auto b = BuilderSpec::parse("smoothcone:a=2,M=4,0,0,1");
    CHECK(b.family == "smoothcone");
    CHECK(b.number("a", 0) == 2);
    CHECK(b.numbers.at("M").size() == 4);
    CHECK_THROWS_WITH_AS(BuilderSpec::parse("smoothcone:a=x1").number("a", 1), doctest::Contains("x1"), ValidationError);
    CHECK_THROWS_WITH_AS(BuilderSpec::parse("smoothcone:=1"), doctest::Contains("=1"), ValidationError);
    DomainParams dp;
    CHECK_THROWS_WITH_AS(build_grid_function(BuilderSpec::parse("wobble:a=1"), dp), doctest::Contains("wobble"),
                         ValidationError);
    dp.dim = 2;
    dp.L = 2;
    dp.h = 0.1;
    CHECK_THROWS_AS(build_grid_function(BuilderSpec::parse("smoothcone:M=1,2,3,1"), dp), ValidationError);
}

TEST_CASE("grid file round trip") {
    auto f = make_smooth_cone(Grid::with_spacing(2, 1.0, 0.25), 1.0, identity_mat());
    std::stringstream ss;
    write_grid(ss, f, {true, 1.5, -0.5});
    auto g = read_grid(ss);
    CHECK(g.grid().same_as(f.grid()));
    CHECK(g.values() == f.values());
    CHECK(g.cone().kind() == ConeModel::Kind::Ellipsoidal);
    std::stringstream bad("2 3\n1 0.5\n1\n2\n");
    CHECK_THROWS_AS(read_grid(bad), ValidationError);
}

TEST_CASE("midpoint defect flags nonconvex data") {
    auto g = Grid::make(1, 21, 1.0);
    std::vector<double> v(g.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = -g.coord(k)[0] * g.coord(k)[0];
    auto f = make_affine(g, {0, 0, 0}, 0).with_values(v);
    CHECK_FALSE(f.convex());
    CHECK(f.midpoint_defect() > 0);
}

}
