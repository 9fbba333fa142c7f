#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nlma/grid_function.hpp"
#include "nlma/kernel.hpp"
#include "nlma/operator.hpp"
#include "nlma/spectral.hpp"

namespace nlma {

// Nodes with |x_a| <= (1 - margin) L on every axis.
std::vector<char> interior_mask(const Grid& g, double margin);

struct ResidualField {
    // MA u - (u - phi) on masked nodes, NaN elsewhere.
    std::vector<double> values;
    double sup = 0.0;
    std::size_t argmax = 0;
};

// Residual with kernel k over the interior subbox. When capped_fallback is set, +inf
// operator values are replaced by Capped((h/2)^{-d-s}) values.
ResidualField residual(const GridFunction& u, const GridFunction& phi, const OperatorParams& op,
                       const KernelSpec& k = KernelSpec::full(), double margin = 0.2, bool capped_fallback = false,
                       const EvalOptions& opt = {});

// sup over nodes x of the subbox and axis/diagonal offsets y up to 4h of
// (u(x+y) + u(x-y) - 2u(x)) / |y|^2, with x +- y on the grid. The solver certifies on
// the same subbox as the residual.
double c11_seminorm(const GridFunction& u, double margin = 0.0);

// Largest |u(x) - u(Tx)| over the reflections of each axis and, for equal axis sizes,
// the swaps of two axes.
double symmetry_defect(const GridFunction& u);

// Smallest Hessian eigenvalue estimate over nodes at depth >= 2; throws when it is <= 0.
void require_strictly_convex(const GridFunction& phi);

struct SolverConfig {
    // Stopping tolerance relative to the solve scale.
    double tol = 1e-3;
    int max_iters = 60;
    double tau0 = 0.5;
    double tau_min = 1.0 / 64.0;
    // Defaults 4h and h when not positive.
    double eps0 = 0.0;
    double eps_min = 0.0;
    double gamma = 0.7;
    // Certification subbox margin, and the smaller margin of the updated region; nodes
    // outside the updated region hold phi + kappa w.
    double margin = 0.2;
    double update_margin = 0.05;
    // Steps taken at eps_min before switching to the full kernel.
    int pinned_steps = 3;
    bool probe = true;
    EvalOptions eval;
    SpectralOptions spectral;
};

struct IterationRecord {
    int iter = 0;
    // 0 marks the full kernel.
    double eps = 0.0;
    double tau = 0.0;
    double sup_residual = 0.0;
    double c11 = 0.0;
    double min_gap_lower = 0.0;
    double min_gap_upper = 0.0;
    bool accepted = true;
};

struct Certification {
    double sup_residual = kInf;
    double c11_u = 0.0;
    double c11_phi = 0.0;
    double min_gap_lower = 0.0;
    double min_gap_upper = 0.0;
    double symmetry = 0.0;
};

struct SolveState {
    GridFunction phi;
    GridFunction upper;
    GridFunction u;
    Barrier barrier;
    OperatorParams op;
    int iter = 0;
    double eps = 0.0;
    double tau = 0.0;
    // max(1, sup of MA phi over the interior subbox), full kernel.
    double scale = 1.0;
    // Far-field weight: u = phi + kappa w outside the updated region.
    double far_kappa = 0.0;
    ResidualField residual;
    std::vector<double> history;
    std::vector<IterationRecord> log;
    bool converged = false;
    Certification cert;
};

// Damped, preconditioned fixed-point iteration for MA u = u - phi between the barriers
// phi and phi + w, projected onto convex functions after every step. A supplied barrier
// replaces the one built from phi.
SolveState solve_global(const GridFunction& phi, double s, const SolverConfig& cfg = {},
                        const std::optional<Barrier>& barrier = std::nullopt,
                        const std::function<void(const IterationRecord&)>& on_iter = {});

// "iter,eps,tau,sup_residual,c11,min_gap_lower,min_gap_upper"
std::string convergence_csv_header();
std::string convergence_csv_row(const IterationRecord& r);

enum class Verdict { Consistent, HypothesisFailed, ComparisonViolated, NoSolutionWitness };
std::string verdict_token(Verdict v);

struct ComparisonReport {
    Verdict verdict = Verdict::Consistent;
    std::size_t node = 0;
    Vec x{};
    // Which inequality failed ("sub" for MA u - u >= f, "super" for f >= MA v - v), or
    // "order" for u <= v.
    std::string detail;
    double lhs = 0.0;
    double rhs = 0.0;
};

// Checks MA u - u >= f >= MA v - v on the nodes of omega, then u <= v at every node.
ComparisonReport comparison_check(const GridFunction& u, const GridFunction& v, const std::vector<double>& f,
                                  const std::vector<char>& omega, const OperatorParams& op, double tol = 1e-6,
                                  const EvalOptions& opt = {});

struct DirichletDemo {
    double s = 1.5;
    double L = 4.0;
    double h = 0.05;
    double f = 0.01;
};

struct DirichletReport {
    ComparisonReport verdict;
    GridFunction envelope;
    // MA U at the nodes inside the unit ball, in node order.
    std::vector<std::size_t> nodes;
    std::vector<double> ma;
};

// d = 1, data |y| outside B_1, constant right-hand side f: the convex envelope U of the
// data is the largest candidate, so f < MA U at an interior node rules out a solution.
DirichletReport demo_dirichlet(const DirichletDemo& demo, const EvalOptions& opt = {});

}  // namespace nlma
