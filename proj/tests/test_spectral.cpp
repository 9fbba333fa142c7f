#include <doctest.h>

#include <cmath>
#include <memory>

#include "nlma/builders.hpp"
#include "nlma/spectral.hpp"

using namespace nlma;

TEST_SUITE("spectral") {

TEST_CASE("normalizing constant matches the cosine integral") {
    // 1 / int_{R^d} (1 - cos y_1) |y|^{-d-s} dy, independent reference quadrature.
    struct Case {
        int d;
        double s, frozen;
    };
    const Case cases[] = {{1, 1.3, 0.33089837989490756}, {1, 1.5, 0.29920671032660934},
                          {1, 1.8, 0.16490493874488524}, {2, 1.3, 0.180101673563525},
                          {2, 1.5, 0.1711671121037355},  {2, 1.8, 0.1008498585607841}};
    for (const auto& c : cases) {
        CAPTURE(c.d);
        CAPTURE(c.s);
        CHECK(frac_laplacian_constant(c.d, c.s) == doctest::Approx(c.frozen).epsilon(1e-6));
    }
}

TEST_CASE("plane waves are eigenfunctions of the periodic multiplier") {
    const int n = 64;
    const double h = 2.0 * kPi / n;
    SpectralPlan plan(2, {n, n, 1}, h);
    std::vector<double> f(plan.size());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) f[i * n + j] = std::cos(3 * i * h + 4 * j * h);
    auto g = plan.apply(f, [](double xi) { return std::pow(xi, 1.5); });
    const double lambda = std::pow(5.0, 1.5);
    for (std::size_t k = 0; k < f.size(); ++k) CHECK(g[k] == doctest::Approx(lambda * f[k]).epsilon(1e-10).scale(1));
}

TEST_CASE("forward and inverse transforms round trip") {
    auto plan = std::make_shared<SpectralPlan>(1, Index{48, 1, 1}, 0.1);
    std::vector<double> v(48);
    for (int i = 0; i < 48; ++i) v[i] = std::sin(0.3 * i) + 0.01 * i * i;
    auto sf = SpectralField::from_values(plan, v);
    auto back = sf.reconstruct();
    for (int i = 0; i < 48; ++i) CHECK(back[i] == doctest::Approx(v[i]).epsilon(1e-12));
}

TEST_CASE("near s = 2 the fractional Laplacian of a Gaussian approaches -Laplacian") {
    DomainParams dp;
    dp.dim = 2;
    dp.L = 8;
    dp.h = 0.1;
    auto f = build_grid_function(BuilderSpec::parse("gauss:amp=1,sigma=1"), dp);
    auto lap = frac_laplacian(f, 1.99);
    const Grid& g = f.grid();
    double worst = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        const Vec y = g.coord(k);
        if (norm(y) > 3) continue;
        const double r2 = dot(y, y);
        const double exact = (2.0 - r2) * std::exp(-0.5 * r2);
        worst = std::max(worst, std::abs(lap[k] - exact));
    }
    CHECK(worst < 0.03);
}

TEST_CASE("resolvent inverts I + c(-Delta)^{s/2}") {
    DomainParams dp;
    dp.dim = 2;
    dp.L = 8;
    dp.h = 0.1;
    auto g = build_grid_function(BuilderSpec::parse("gauss:amp=1,sigma=0.8"), dp);
    const double c = 0.7;
    auto u = resolvent_apply(g, 1.5, c);
    auto lu = frac_laplacian(u, 1.5);
    double worst = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k)
        if (norm(g.grid().coord(k)) < 4) worst = std::max(worst, std::abs(u[k] + c * lu[k] - g[k]));
    CHECK(worst < 1e-3);
}

TEST_CASE("fractional Laplacian of the smooth cone is negative at its vertex") {
    DomainParams dp;
    dp.dim = 1;
    dp.L = 20;
    dp.h = 0.05;
    auto f = build_grid_function(BuilderSpec::parse("smoothcone:a=1"), dp);
    auto lap = frac_laplacian(f, 1.5);
    const std::size_t o = f.grid().nearest({0, 0, 0});
    CHECK(lap[o] < 0);
    CHECK(lap[o] == doctest::Approx(cone_frac_laplacian(f.cone(), {0, 0, 0}, 1.5)).epsilon(1e-3));
}

TEST_CASE("barrier in 2D decays like |x|^{1-s}") {
    DomainParams dp;
    dp.dim = 2;
    dp.L = 8;
    dp.nodes = 128;
    auto phi = build_grid_function(BuilderSpec::parse("smoothcone:a=1"), dp);
    auto b = build_upper_barrier(phi, 1.5);
    CHECK(b.exponent == doctest::Approx(-0.5).epsilon(0.3));
    for (std::size_t k = 0; k < b.w.size(); ++k) CHECK(b.w[k] > 0);
}

TEST_CASE("box too small for the barrier fit is reported") {
    DomainParams dp;
    dp.dim = 1;
    dp.L = 20;
    dp.h = 0.05;
    auto phi = build_grid_function(BuilderSpec::parse("smoothcone:a=1"), dp);
    SpectralOptions opt;
    opt.decay_tol = 1e-4;
    CHECK_THROWS_WITH_AS(build_upper_barrier(phi, 1.5, opt), doctest::Contains("decay exponent"), ValidationError);
}

}
