#include "nlma/solver.hpp"

#include <algorithm>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "nlma/builders.hpp"
#include "nlma/extended.hpp"
#include "nlma/geometry.hpp"

namespace nlma {

std::vector<char> interior_mask(const Grid& g, double margin) {
    std::vector<char> m(g.size(), 0);
    const double lim = (1.0 - margin) * g.L + 1e-12 * g.L;
    for (std::size_t k = 0; k < g.size(); ++k) {
        Vec x = g.coord(k);
        bool in = true;
        for (int a = 0; a < g.dim; ++a) in = in && std::abs(x[a]) <= lim;
        m[k] = in;
    }
    return m;
}

ResidualField residual(const GridFunction& u, const GridFunction& phi, const OperatorParams& op, const KernelSpec& k,
                       double margin, bool capped_fallback, const EvalOptions& opt) {
    if (!u.grid().same_as(phi.grid())) throw ValidationError("u and phi live on different grids");
    const Grid& g = u.grid();
    const auto mask = interior_mask(g, margin);
    const KernelSpec cap = KernelSpec::capped(std::pow(0.5 * g.h, -double(g.dim) - op.s));
    ResidualField r;
    r.values.assign(g.size(), std::nan(""));
    r.sup = 0.0;
    for (std::size_t n = 0; n < g.size(); ++n) {
        if (!mask[n]) continue;
        double ma = eval_ma_node(u, n, op, k, std::nullopt, opt).value;
        if (ma == kInf && capped_fallback) ma = eval_ma_node(u, n, op, cap, std::nullopt, opt).value;
        double v = ma - (u[n] - phi[n]);
        r.values[n] = v;
        if (!(std::abs(v) <= r.sup)) {
            r.sup = std::abs(v);
            r.argmax = n;
        }
    }
    return r;
}

double c11_seminorm(const GridFunction& u, double margin) {
    const Grid& g = u.grid();
    const auto dirs = stencil_directions(g.dim, true);
    const auto mask = interior_mask(g, margin);
    double best = -kInf;
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (!mask[k]) continue;
        Index i = g.multi(k);
        for (const auto& e : dirs)
            for (int m = 1; m <= 4; ++m) {
                Index p = i, q = i;
                bool ok = true;
                double len2 = 0.0;
                for (int a = 0; a < g.dim; ++a) {
                    p[a] += m * e[a];
                    q[a] -= m * e[a];
                    ok = ok && p[a] >= 0 && p[a] < g.n[a] && q[a] >= 0 && q[a] < g.n[a];
                    len2 += double(m * e[a]) * (m * e[a]) * g.h * g.h;
                }
                if (!ok) continue;
                best = std::max(best, (u[g.index(p)] + u[g.index(q)] - 2.0 * u[k]) / len2);
            }
    }
    return best;
}

double symmetry_defect(const GridFunction& u) {
    const Grid& g = u.grid();
    double worst = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        Index i = g.multi(k);
        for (int a = 0; a < g.dim; ++a) {
            Index j = i;
            j[a] = g.n[a] - 1 - i[a];
            worst = std::max(worst, std::abs(u[k] - u[g.index(j)]));
        }
        for (int a = 0; a < g.dim; ++a)
            for (int b = a + 1; b < g.dim; ++b) {
                if (g.n[a] != g.n[b]) continue;
                Index j = i;
                std::swap(j[a], j[b]);
                worst = std::max(worst, std::abs(u[k] - u[g.index(j)]));
            }
    }
    return worst;
}

void require_strictly_convex(const GridFunction& phi) {
    const Grid& g = phi.grid();
    const int d = g.dim;
    double worst = kInf;
    std::size_t where = 0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (g.depth(k) < 2) continue;
        Mat H = phi.hessian(k);
        Eigen::MatrixXd m(d, d);
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) m(a, b) = 0.5 * (H[a][b] + H[b][a]);
        double lo = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
        if (lo < worst) {
            worst = lo;
            where = k;
        }
    }
    if (!(worst > 0.0)) {
        std::ostringstream os;
        Vec x = g.coord(where);
        os << "phi fails the strict-convexity probe: Hessian eigenvalue " << worst << " at x = (";
        for (int a = 0; a < d; ++a) os << (a ? "," : "") << x[a];
        os << ")";
        throw ValidationError(os.str());
    }
}

namespace {

GridFunction clip(const GridFunction& u, const GridFunction& lo, const GridFunction& hi) {
    std::vector<double> v = u.values();
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = std::min(std::max(v[k], lo[k]), hi[k]);
    return u.with_values(std::move(v));
}

GridFunction raise_to(const GridFunction& u, const GridFunction& lo) {
    std::vector<double> v = u.values();
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = std::max(v[k], lo[k]);
    return u.with_values(std::move(v));
}

// Convex projection that keeps phi <= u <= upper: envelope, clip, and the envelope
// again (which stays above the convex phi).
GridFunction project(const GridFunction& u, const GridFunction& phi, const GridFunction& upper) {
    GridFunction v = clip(convex_envelope(u), phi, upper);
    return raise_to(convex_envelope(v), phi);
}

void gaps(const GridFunction& u, const GridFunction& phi, const GridFunction& upper, double& lower, double& up) {
    lower = kInf;
    up = kInf;
    for (std::size_t k = 0; k < u.size(); ++k) {
        lower = std::min(lower, u[k] - phi[k]);
        up = std::min(up, upper[k] - u[k]);
    }
}

}  // namespace

SolveState solve_global(const GridFunction& phi, double s, const SolverConfig& cfg,
                        const std::optional<Barrier>& barrier, const std::function<void(const IterationRecord&)>& on_iter) {
    SolveState st;
    st.op = OperatorParams::make(phi.dim(), s);
    if (!(cfg.tol > 0.0)) throw ValidationError("tol must be positive");
    if (cfg.max_iters < 0) throw ValidationError("max-iters must be nonnegative");
    if (!(cfg.tau0 > 0.0 && cfg.tau0 <= 1.0)) throw ValidationError("tau0 must lie in (0, 1]");
    if (!(cfg.margin >= 0.0 && cfg.margin < 1.0)) throw ValidationError("margin must lie in [0, 1)");
    if (!(cfg.update_margin >= 0.0 && cfg.update_margin <= cfg.margin))
        throw ValidationError("update margin must lie in [0, margin]");
    const Grid& g = phi.grid();
    const double eps_min = cfg.eps_min > 0.0 ? cfg.eps_min : g.h;
    const double eps0 = cfg.eps0 > 0.0 ? cfg.eps0 : 4.0 * g.h;
    if (eps0 < eps_min) throw ValidationError("eps0 must not be smaller than eps-min");
    if (cfg.probe) require_strictly_convex(phi);

    st.phi = phi;
    st.barrier = barrier ? *barrier : build_upper_barrier(phi, s, cfg.spectral);
    if (!st.barrier.w.grid().same_as(g)) throw ValidationError("barrier grid does not match phi");
    st.upper = combine(1.0, phi, 1.0, st.barrier.w);
    const auto mask = interior_mask(g, cfg.update_margin);
    const auto cert_mask = interior_mask(g, cfg.margin);
    const double A = 1.0 / frac_laplacian_constant(g.dim, s);

    auto kernel = [](double eps) { return eps > 0.0 ? KernelSpec::near_pinned(eps) : KernelSpec::full(); };
    // Evaluated on the updated region; the sup runs over the certification subbox.
    auto eval = [&](const GridFunction& u, double eps) {
        ResidualField r = residual(u, phi, st.op, kernel(eps), cfg.update_margin, true, cfg.eval);
        r.sup = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k)
            if (cert_mask[k] && !(std::abs(r.values[k]) <= r.sup)) {
                r.sup = std::abs(r.values[k]);
                r.argmax = k;
            }
        return r;
    };
    auto record = [&](const GridFunction& u, const ResidualField& r, bool accepted) {
        IterationRecord rec;
        rec.iter = st.iter;
        rec.eps = st.eps;
        rec.tau = st.tau;
        rec.sup_residual = r.sup;
        rec.c11 = c11_seminorm(u, cfg.margin);
        rec.accepted = accepted;
        gaps(u, phi, st.upper, rec.min_gap_lower, rec.min_gap_upper);
        st.log.push_back(rec);
        if (on_iter) on_iter(rec);
    };

    // Far field: u - phi decays like the barrier w. Nodes outside the updated region, and
    // the tail beyond the box, hold phi + kappa w with kappa in [0, 1] refitted after
    // every step to u - phi on a band just inside the updated region.
    const GridFunction& w = st.barrier.w;
    const auto inner = interior_mask(g, std::min(cfg.margin, cfg.update_margin + 0.05));
    auto with_far_field = [&](std::vector<double> v, double kappa) {
        for (std::size_t k = 0; k < g.size(); ++k)
            if (!mask[k]) v[k] = phi[k] + kappa * w[k];
        Tail t = phi.tail();
        t.exact = [phi, w, kappa](const Vec& y) { return phi.exterior(y) + kappa * w.exterior(y); };
        return GridFunction(g, std::move(v), std::move(t));
    };
    auto fit_kappa = [&](const std::vector<double>& v) {
        double num = 0.0, den = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k) {
            if (!mask[k] || inner[k]) continue;
            num += (v[k] - phi[k]) * w[k];
            den += w[k] * w[k];
        }
        return den > 0.0 ? std::clamp(num / den, 0.0, 1.0) : 0.0;
    };
    // Start from the subsolution phi.
    st.u = with_far_field(phi.values(), 0.0);
    st.scale = std::max(1.0, eval(phi, 0.0).sup);
    const double tol = cfg.tol * st.scale;
    st.eps = eps0;
    st.tau = cfg.tau0;
    st.residual = eval(st.u, st.eps);
    st.history.push_back(st.residual.sup);
    record(st.u, st.residual, true);

    bool full = false;
    int steps_at_min = 0;
    int gamma_power = 0;
    while (st.iter < cfg.max_iters) {
        if (full && st.residual.sup < tol) {
            st.converged = true;
            break;
        }
        if (!full && st.eps <= eps_min && (st.residual.sup < tol || steps_at_min >= cfg.pinned_steps)) {
            full = true;
            st.eps = 0.0;
            ++st.iter;
            st.residual = eval(st.u, 0.0);
            st.history.push_back(st.residual.sup);
            record(st.u, st.residual, true);
            continue;
        }
        std::vector<double> rv(g.size(), 0.0);
        for (std::size_t k = 0; k < g.size(); ++k)
            // -inf only shows up next to the box faces, where the far-field tail meets
            // the iterate; those nodes get no update.
            if (mask[k] && std::isfinite(st.residual.values[k])) rv[k] = st.residual.values[k];
        GridFunction rf(g, rv, Tail{});
        SpectralOptions so = cfg.spectral;
        so.band_tol = kInf;
        GridFunction pr = resolvent_apply(rf, s, A, so);
        std::vector<double> next = st.u.values();
        for (std::size_t k = 0; k < g.size(); ++k)
            if (mask[k]) next[k] += st.tau * pr[k];
        const double kappa = fit_kappa(next);
        GridFunction trial = project(with_far_field(std::move(next), kappa), phi, st.upper);

        const bool burn_in = !full && st.eps > eps_min;
        const double eps_next = full ? 0.0 : std::max(eps_min, eps0 * std::pow(cfg.gamma, gamma_power + 1));
        ++st.iter;
        ResidualField rt = eval(trial, eps_next);
        if (burn_in || rt.sup <= st.residual.sup) {
            st.u = std::move(trial);
            st.far_kappa = kappa;
            st.residual = std::move(rt);
            st.history.push_back(st.residual.sup);
            if (!full) {
                ++gamma_power;
                if (st.eps <= eps_min) ++steps_at_min;
                st.eps = eps_next;
            }
            record(st.u, st.residual, true);
        } else {
            record(trial, rt, false);
            st.tau *= 0.5;
            if (st.tau < cfg.tau_min) break;
        }
    }
    if (!full) {
        st.eps = 0.0;
        st.residual = eval(st.u, 0.0);
    }
    if (!st.converged) st.converged = full && st.residual.sup < tol;

    st.cert.sup_residual = st.residual.sup;
    st.cert.c11_u = c11_seminorm(st.u, cfg.margin);
    st.cert.c11_phi = c11_seminorm(phi, cfg.margin);
    gaps(st.u, phi, st.upper, st.cert.min_gap_lower, st.cert.min_gap_upper);
    st.cert.symmetry = symmetry_defect(st.u);
    return st;
}

std::string convergence_csv_header() { return "iter,eps,tau,sup_residual,c11,min_gap_lower,min_gap_upper"; }

std::string convergence_csv_row(const IterationRecord& r) {
    std::string row = std::to_string(r.iter);
    for (double v : {r.eps, r.tau, r.sup_residual, r.c11, r.min_gap_lower, r.min_gap_upper}) row += "," + format_extended(v);
    return row;
}

std::string verdict_token(Verdict v) {
    switch (v) {
        case Verdict::Consistent: return "consistent";
        case Verdict::HypothesisFailed: return "hypothesis-failed";
        case Verdict::ComparisonViolated: return "comparison-violated";
        case Verdict::NoSolutionWitness: return "no-solution-witness";
    }
    return "consistent";
}

ComparisonReport comparison_check(const GridFunction& u, const GridFunction& v, const std::vector<double>& f,
                                  const std::vector<char>& omega, const OperatorParams& op, double tol,
                                  const EvalOptions& opt) {
    if (!u.grid().same_as(v.grid())) throw ValidationError("u and v live on different grids");
    const Grid& g = u.grid();
    if (f.size() != g.size() || omega.size() != g.size()) throw ValidationError("f and omega must cover the grid");
    ComparisonReport rep;
    auto fail = [&](Verdict verdict, std::size_t k, const char* what, double lhs, double rhs) {
        rep.verdict = verdict;
        rep.node = k;
        rep.x = g.coord(k);
        rep.detail = what;
        rep.lhs = lhs;
        rep.rhs = rhs;
        return rep;
    };
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (!omega[k]) continue;
        double tk = tol * std::max(1.0, std::abs(f[k]));
        double mu = eval_ma_node(u, k, op, KernelSpec::full(), std::nullopt, opt).value - u[k];
        if (!(mu >= f[k] - tk)) return fail(Verdict::HypothesisFailed, k, "sub", mu, f[k]);
        double mv = eval_ma_node(v, k, op, KernelSpec::full(), std::nullopt, opt).value - v[k];
        if (!(f[k] >= mv - tk)) return fail(Verdict::HypothesisFailed, k, "super", f[k], mv);
    }
    for (std::size_t k = 0; k < g.size(); ++k) {
        double tk = tol * std::max({1.0, std::abs(u[k]), std::abs(v[k])});
        if (u[k] > v[k] + tk) return fail(Verdict::ComparisonViolated, k, "order", u[k], v[k]);
    }
    return rep;
}

DirichletReport demo_dirichlet(const DirichletDemo& demo, const EvalOptions& opt) {
    const OperatorParams op = OperatorParams::make(1, demo.s);
    if (!(demo.L > 1.0)) throw ValidationError("box half-width must exceed 1");
    if (!(demo.h > 0.0 && demo.h < 0.5)) throw ValidationError("spacing must lie in (0, 0.5)");
    if (!(demo.f >= 0.0) || !std::isfinite(demo.f)) throw ValidationError("f must be finite and nonnegative");
    const Grid g = Grid::with_spacing(1, demo.L, demo.h);
    // Inside B_1 the data is absent; values above every chord leave the envelope free there.
    std::vector<double> v(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
        double r = std::abs(g.coord(k)[0]);
        v[k] = r >= 1.0 ? r : 1.0 + 2.0 * demo.L;
    }
    Tail t;
    t.cone = ConeModel::polyhedral(1, {Vec{1, 0, 0}, Vec{-1, 0, 0}});
    t.o_max = 0.0;
    t.exact = [](const Vec& y) { return std::max(1.0, std::abs(y[0])); };
    DirichletReport rep;
    rep.envelope = convex_envelope(GridFunction(g, std::move(v), std::move(t)));
    double best = -kInf;
    std::size_t best_node = 0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (std::abs(g.coord(k)[0]) >= 1.0 - 1e-12) continue;
        double m = eval_ma_node(rep.envelope, k, op, KernelSpec::full(), std::nullopt, opt).value;
        rep.nodes.push_back(k);
        rep.ma.push_back(m);
        if (m - demo.f > best) {
            best = m - demo.f;
            best_node = k;
        }
    }
    rep.verdict.node = best_node;
    rep.verdict.x = g.coord(best_node);
    rep.verdict.lhs = best + demo.f;
    rep.verdict.rhs = demo.f;
    if (best > 0.0) {
        rep.verdict.verdict = Verdict::NoSolutionWitness;
        rep.verdict.detail = "MA U > f";
    } else {
        rep.verdict.verdict = Verdict::Consistent;
        rep.verdict.detail = "MA U <= f";
    }
    return rep;
}

}  // namespace nlma
