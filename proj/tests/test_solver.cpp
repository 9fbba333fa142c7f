#include <doctest.h>

#include <cmath>

#include "nlma/builders.hpp"
#include "nlma/solver.hpp"

using namespace nlma;

namespace {

GridFunction cone1d(int nodes, double L) {
    DomainParams dp;
    dp.L = L;
    dp.nodes = nodes;
    return build_grid_function(BuilderSpec::parse("smoothcone:a=1"), dp);
}

}  // namespace

TEST_SUITE("solver") {

TEST_CASE("c11 seminorm of a quadratic is its curvature") {
    DomainParams dp;
    dp.dim = 2;
    dp.L = 2;
    dp.h = 0.1;
    auto q = build_grid_function(BuilderSpec::parse("quadratic:M=3"), dp);
    CHECK(c11_seminorm(q) == doctest::Approx(3.0).epsilon(1e-10));
}

TEST_CASE("c11 seminorm of |y| is of order 1/h") {
    DomainParams dp;
    dp.L = 2;
    dp.h = 0.05;
    auto f = build_grid_function(BuilderSpec::parse("maxplanes:p=1,-1,r=0"), dp);
    // (h + h - 0) / h^2 at the kink
    CHECK(c11_seminorm(f) == doctest::Approx(2.0 / dp.h).epsilon(1e-10));
}

TEST_CASE("interior mask and symmetry defect") {
    auto g = Grid::make(2, 11, 1.0);
    auto m = interior_mask(g, 0.2);
    CHECK(m[g.index({5, 5, 0})]);
    CHECK_FALSE(m[g.index({0, 5, 0})]);
    auto f = make_smooth_cone(g, 1.0, identity_mat());
    CHECK(symmetry_defect(f) < 1e-14);
    auto a = make_affine(g, {1, 0, 0}, 0);
    CHECK(symmetry_defect(a) == doctest::Approx(2.0));
}

TEST_CASE("phi is a subsolution: the residual of phi is nonnegative") {
    auto phi = cone1d(1024, 20);
    auto r = residual(phi, phi, OperatorParams::make(1, 1.5));
    for (double v : r.values)
        if (!std::isnan(v)) CHECK(v >= 0);
}

TEST_CASE("strict convexity probe") {
    DomainParams dp;
    dp.L = 4;
    dp.h = 0.05;
    CHECK_NOTHROW(require_strictly_convex(build_grid_function(BuilderSpec::parse("smoothcone:a=1"), dp)));
    CHECK_THROWS_AS(require_strictly_convex(build_grid_function(BuilderSpec::parse("affine:b=1"), dp)),
                    ValidationError);
}

TEST_CASE("zero barrier pins u to phi") {
    DomainParams dp;
    dp.L = 8;
    dp.h = 0.1;
    SolverConfig cfg;
    cfg.probe = false;
    cfg.max_iters = 5;
    // Affine phi: MA phi = 0, so u = phi is the fixed point.
    auto lin = build_grid_function(BuilderSpec::parse("affine:b=0.5,c=1"), dp);
    Barrier zero{make_affine(lin.grid(), {0, 0, 0}, 0.0), 0.0, 0.0};
    auto st = solve_global(lin, 1.5, cfg, zero);
    CHECK(st.converged);
    CHECK(st.u.values() == lin.values());
    // Strictly convex phi: the sandwich collapses but MA phi > 0, so no convergence.
    auto phi = build_grid_function(BuilderSpec::parse("smoothcone:a=1"), dp);
    Barrier zero2{make_affine(phi.grid(), {0, 0, 0}, 0.0), 0.0, 0.0};
    auto st2 = solve_global(phi, 1.5, cfg, zero2);
    CHECK_FALSE(st2.converged);
    for (std::size_t k = 0; k < phi.size(); ++k) CHECK(st2.u[k] == doctest::Approx(phi[k]).epsilon(1e-12));
}

TEST_CASE("1D solve: sandwich, convexity and c11 along the iteration") {
    auto phi = cone1d(513, 20);
    SolverConfig cfg;
    double worst_lower = kInf, worst_upper = kInf, worst_c11 = 0;
    auto st = solve_global(phi, 1.5, cfg, std::nullopt, [&](const IterationRecord& r) {
        if (!r.accepted) return;
        worst_lower = std::min(worst_lower, r.min_gap_lower);
        worst_upper = std::min(worst_upper, r.min_gap_upper);
        worst_c11 = std::max(worst_c11, r.c11);
    });
    CHECK(st.converged);
    CHECK(worst_lower >= 0);
    CHECK(worst_upper >= 0);
    CHECK(worst_c11 <= 1.1 * st.cert.c11_phi);
    CHECK(st.u.convex());
    CHECK(st.cert.symmetry < 1e-8);
    CHECK(st.cert.sup_residual <= 2e-3 * st.scale);
    // Sup-residual history never increases once the full kernel is in use.
    std::vector<double> full;
    for (const auto& r : st.log)
        if (r.eps == 0.0 && r.accepted) full.push_back(r.sup_residual);
    for (std::size_t i = 1; i < full.size(); ++i) CHECK(full[i] <= full[i - 1]);
}

TEST_CASE("comparison check verdicts") {
    auto phi = cone1d(257, 8);
    auto op = OperatorParams::make(1, 1.5);
    auto omega = interior_mask(phi.grid(), 0.5);
    // v = u with f = MA u - u meets both hypotheses with equality.
    std::vector<double> f(phi.size(), 0.0);
    for (std::size_t k = 0; k < f.size(); ++k)
        if (omega[k]) f[k] = eval_ma_node(phi, k, op, KernelSpec::full()).value - phi[k];
    CHECK(comparison_check(phi, phi, f, omega, op).verdict == Verdict::Consistent);
    std::vector<double> zero(phi.size(), 0.0);
    CHECK(comparison_check(phi, phi, zero, omega, op).verdict == Verdict::HypothesisFailed);
    // u = phi, v = phi + 20, f = -phi - 5: the sub side needs MA phi >= 0 and the super
    // side MA phi <= 15.
    auto v = combine(1.0, phi, 1.0, make_affine(phi.grid(), {0, 0, 0}, 20.0));
    std::vector<double> fv(f.size());
    for (std::size_t k = 0; k < f.size(); ++k) fv[k] = -phi[k] - 5.0;
    auto rep = comparison_check(phi, v, fv, omega, op);
    CHECK(rep.verdict == Verdict::Consistent);
    auto swapped = comparison_check(v, phi, fv, omega, op);
    CHECK(swapped.verdict != Verdict::Consistent);
}

TEST_CASE("dirichlet demo finds a witness") {
    auto rep = demo_dirichlet({});
    CHECK(rep.verdict.verdict == Verdict::NoSolutionWitness);
    CHECK(std::abs(rep.verdict.x[0]) < 1.0);
    CHECK(rep.verdict.lhs > rep.verdict.rhs);
    CHECK(verdict_token(rep.verdict.verdict) == "no-solution-witness");
}

TEST_CASE("convergence csv layout") {
    CHECK(convergence_csv_header() == "iter,eps,tau,sup_residual,c11,min_gap_lower,min_gap_upper");
    IterationRecord r;
    r.iter = 3;
    r.eps = 0.25;
    r.tau = 0.5;
    r.sup_residual = 1e-3;
    r.c11 = 1;
    CHECK(convergence_csv_row(r) == "3,0.25,0.5,0.001,1,0,0");
}

TEST_CASE("solver configuration is validated") {
    auto phi = cone1d(129, 8);
    SolverConfig cfg;
    cfg.tol = 0;
    CHECK_THROWS_AS(solve_global(phi, 1.5, cfg), ValidationError);
    cfg = {};
    cfg.tau0 = 1.5;
    CHECK_THROWS_AS(solve_global(phi, 1.5, cfg), ValidationError);
    cfg = {};
    cfg.eps0 = 0.01;
    cfg.eps_min = 0.1;
    CHECK_THROWS_AS(solve_global(phi, 1.5, cfg), ValidationError);
    CHECK_THROWS_AS(solve_global(phi, 2.5, {}), ValidationError);
}

}
