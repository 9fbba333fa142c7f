#include "nlma/suites.hpp"

#include <algorithm>
#include <sstream>

#include "nlma/builders.hpp"
#include "nlma/geometry.hpp"
#include "nlma/profile.hpp"
#include "nlma/spectral.hpp"

namespace nlma {

namespace {

double uniform(std::mt19937_64& rng, double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }

Grid suite_grid(int d) { return d == 1 ? Grid::with_spacing(1, 8.0, 0.05) : Grid::with_spacing(2, 4.0, 0.1); }

Mat random_spd(std::mt19937_64& rng, int d) {
    Mat m{};
    if (d == 1) {
        m[0][0] = uniform(rng, 0.5, 3.0);
        return m;
    }
    double th = uniform(rng, 0.0, kPi);
    double l1 = uniform(rng, 0.5, 3.0), l2 = uniform(rng, 0.5, 3.0);
    double c = std::cos(th), s = std::sin(th);
    m[0][0] = l1 * c * c + l2 * s * s;
    m[1][1] = l1 * s * s + l2 * c * c;
    m[0][1] = m[1][0] = (l1 - l2) * c * s;
    return m;
}

// Tracks pass counts and the largest relative violation.
struct Tally {
    SuiteResult r;
    double tol;
    Tally(std::string name, double t) : tol(t) { r.name = std::move(name); }
    void check(double violation, const std::string& what) {
        ++r.total;
        r.worst = std::max(r.worst, violation);
        if (violation <= tol) {
            ++r.passed;
        } else if (r.detail.empty()) {
            std::ostringstream os;
            os << what << " (relative violation " << violation << ")";
            r.detail = os.str();
        }
    }
};

double rel(double excess, double a, double b) {
    double s = std::max({std::abs(a), std::abs(b), 1e-300});
    return excess / s;
}

std::string where(int i, const Vec& x, int d) {
    std::ostringstream os;
    os << "instance " << i << " at (";
    for (int a = 0; a < d; ++a) os << (a ? "," : "") << x[a];
    os << ")";
    return os.str();
}

double ma(const GridFunction& f, std::size_t node, const OperatorParams& op, const KernelSpec& k = KernelSpec::full()) {
    return eval_ma_node(f, node, op, k).value;
}

}  // namespace

GridFunction random_convex(std::mt19937_64& rng, const Grid& g) {
    const int d = g.dim;
    GridFunction f = make_smooth_cone(g, uniform(rng, 0.5, 2.0), random_spd(rng, d));
    if (uniform(rng, 0.0, 1.0) < 0.5) return f;
    std::vector<Vec> p(3);
    std::vector<double> c(3);
    for (int i = 0; i < 3; ++i) {
        for (int a = 0; a < d; ++a) p[i][a] = uniform(rng, -1.0, 1.0);
        c[i] = uniform(rng, -0.5, 0.5);
    }
    return combine(1.0, f, 1.0, make_max_planes(g, p, c, uniform(rng, 0.3, 1.0)));
}

std::size_t random_inner_node(std::mt19937_64& rng, const Grid& g) {
    Index i{0, 0, 0};
    for (int a = 0; a < g.dim; ++a) {
        int lo = g.n[a] / 4, hi = g.n[a] - 1 - g.n[a] / 4;
        i[a] = std::uniform_int_distribution<int>(lo, hi)(rng);
    }
    return g.index(i);
}

GridFunction touching_bump(const Grid& g, const Vec& x, double c, double a) {
    Tail t;
    t.cone = ConeModel::ellipsoidal(g.dim, {{{c * c, 0, 0}, {0, c * c, 0}, {0, 0, c * c}}});
    t.o_max = c * (a + norm(x));
    return sample(g, [x, c, a](const Vec& y) { return c * (std::sqrt(a * a + dot(sub(y, x), sub(y, x))) - a); }, t);
}

SuiteResult monotonicity_suite(const SuiteOptions& opt) {
    std::mt19937_64 rng(opt.seed);
    Tally t("monotonicity", opt.tol);
    for (int i = 0; i < opt.instances; ++i) {
        const int d = 1 + i % 2;
        const Grid g = suite_grid(d);
        const OperatorParams op = OperatorParams::make(d, opt.s);
        GridFunction v = random_convex(rng, g);
        std::size_t node = random_inner_node(rng, g);
        Vec x = g.coord(node);
        GridFunction u = combine(1.0, v, 1.0, touching_bump(g, x, uniform(rng, 0.2, 1.0), uniform(rng, 0.3, 1.5)));
        double mu = ma(u, node, op), mv = ma(v, node, op);
        t.check(rel(mv - mu, mu, mv), where(i, x, d));
    }
    return t.r;
}

SuiteResult concavity_suite(const SuiteOptions& opt) {
    std::mt19937_64 rng(opt.seed + 1);
    Tally t("concavity", opt.tol);
    for (int i = 0; i < opt.instances; ++i) {
        const int d = 1 + i % 2;
        const Grid g = suite_grid(d);
        const OperatorParams op = OperatorParams::make(d, opt.s);
        GridFunction u = random_convex(rng, g);
        GridFunction v = random_convex(rng, g);
        std::size_t node = random_inner_node(rng, g);
        GridFunction m = combine(0.5, u, 0.5, v);
        double mu = ma(u, node, op), mv = ma(v, node, op), mm = ma(m, node, op);
        double avg = 0.5 * (mu + mv);
        t.check(rel(avg - mm, avg, mm), where(i, g.coord(node), d));
    }
    return t.r;
}

SuiteResult capped_suite(const SuiteOptions& opt) {
    std::mt19937_64 rng(opt.seed + 2);
    Tally t("capped-monotone", opt.tol);
    const std::vector<double> ns = {1.0, 10.0, 1e2, 1e3, 1e4, 1e6, 1e9};
    for (int i = 0; i < opt.instances; ++i) {
        const int d = 1 + i % 2;
        const Grid g = suite_grid(d);
        const OperatorParams op = OperatorParams::make(d, opt.s);
        GridFunction f = random_convex(rng, g);
        std::size_t node = random_inner_node(rng, g);
        double full = ma(f, node, op);
        double prev = -kInf, worst = -kInf;
        for (double n : ns) {
            double v = ma(f, node, op, KernelSpec::capped(n));
            if (prev > -kInf) worst = std::max(worst, rel(prev - v, prev, v));
            worst = std::max(worst, rel(v - full, v, full));
            prev = v;
        }
        t.check(worst, where(i, g.coord(node), d));
    }
    return t.r;
}

SuiteResult near_pinned_suite(const SuiteOptions& opt) {
    std::mt19937_64 rng(opt.seed + 3);
    // The pinned near part and the rearranged far part are integrated separately, which
    // leaves relative noise near 1e-6 when the two values nearly coincide.
    Tally t("near-pinned-order", std::max(opt.tol, 1e-5));
    for (int i = 0; i < opt.instances; ++i) {
        const int d = 1 + i % 2;
        const Grid g = suite_grid(d);
        const OperatorParams op = OperatorParams::make(d, opt.s);
        GridFunction f = random_convex(rng, g);
        std::size_t node = random_inner_node(rng, g);
        double full = ma(f, node, op);
        double worst = -kInf, prev = kInf;
        for (double m : {4.0, 2.0, 1.0}) {
            double v = ma(f, node, op, KernelSpec::near_pinned(m * g.h));
            worst = std::max(worst, rel(full - v, full, v));
            if (prev < kInf) worst = std::max(worst, rel(v - prev, v, prev));
            prev = v;
        }
        t.check(worst, where(i, g.coord(node), d));
    }
    return t.r;
}

SuiteResult localized_suite(const SuiteOptions& opt) {
    std::mt19937_64 rng(opt.seed + 4);
    Tally t("localized", opt.tol);
    for (int i = 0; i < opt.instances; ++i) {
        const int d = 1 + i % 2;
        const Grid g = suite_grid(d);
        const OperatorParams op = OperatorParams::make(d, opt.s);
        const KernelSpec loc = KernelSpec::localized(uniform(rng, 0.5, 3.0));
        if (i % 4 < 2) {
            GridFunction f = random_convex(rng, g);
            std::size_t node = random_inner_node(rng, g);
            double full = ma(f, node, op), lv = ma(f, node, op, loc);
            t.check(rel(lv - full, lv, full), where(i, g.coord(node), d) + " localized above full");
        } else {
            Mat m = random_spd(rng, d);
            Tail tail;
            tail.growth = 2;
            GridFunction q = sample(g, [m, d](const Vec& y) { return 0.5 * quad_form(m, y, d); }, tail);
            std::size_t n1 = random_inner_node(rng, g), n2 = random_inner_node(rng, g);
            double a = ma(q, n1, op, loc), b = ma(q, n2, op, loc);
            t.check(rel(std::abs(a - b), a, b), where(i, g.coord(n1), d) + " quadratic not translation invariant");
        }
    }
    return t.r;
}

SuiteResult envelope_suite(const SuiteOptions& opt) {
    std::mt19937_64 rng(opt.seed + 5);
    Tally t("envelope", opt.tol);
    for (int i = 0; i < opt.instances; ++i) {
        const int d = 1 + i % 2;
        const Grid g = suite_grid(d);
        GridFunction c = random_convex(rng, g);
        std::vector<double> v = c.values();
        const double amp = uniform(rng, -1.0, 1.0), sig = uniform(rng, 0.3, 1.5);
        Vec ctr{0, 0, 0};
        for (int a = 0; a < d; ++a) ctr[a] = uniform(rng, -0.5 * g.L, 0.5 * g.L);
        for (std::size_t k = 0; k < v.size(); ++k) {
            Vec y = sub(g.coord(k), ctr);
            v[k] += amp * std::exp(-dot(y, y) / (2 * sig * sig));
        }
        GridFunction f = c.with_values(v);
        GridFunction e = convex_envelope(f);
        GridFunction ee = convex_envelope(e);
        GridFunction ce = convex_envelope(c);
        const double sc = f.scale();
        double worst = -kInf;
        for (std::size_t k = 0; k < v.size(); ++k) {
            worst = std::max(worst, (e[k] - f[k]) / sc);
            worst = std::max(worst, std::abs(ee[k] - e[k]) / sc);
            worst = std::max(worst, std::abs(ce[k] - c[k]) / sc);
        }
        worst = std::max(worst, e.midpoint_defect() / sc);
        t.check(worst, "instance " + std::to_string(i));
    }
    return t.r;
}

SuiteResult rearrangement_suite(const SuiteOptions& opt) {
    std::mt19937_64 rng(opt.seed + 6);
    Tally t("rearrangement", opt.tol);
    for (int i = 0; i < opt.instances; ++i) {
        const int d = 1 + i % 2;
        const Grid g = suite_grid(d);
        GridFunction f = random_convex(rng, g);
        std::size_t node = random_inner_node(rng, g);
        SectionProfile p = section_profile(f, g.coord(node));
        RadialProfile v = radial_rearrangement(p);
        double worst = -kInf;
        for (double lt : {-3.0, -2.0, -1.0, 0.0}) {
            double level = std::pow(10.0, lt) * f.scale();
            double m = p.measure(level);
            if (!std::isfinite(m) || m <= 0.0) continue;
            double r = std::pow(m / unit_ball_volume(d), 1.0 / d);
            worst = std::max(worst, std::abs(v.value(r) - level) / level);
        }
        t.check(worst, where(i, g.coord(node), d));
    }
    return t.r;
}

SuiteResult spectral_suite(const SuiteOptions& opt) {
    std::mt19937_64 rng(opt.seed + 7);
    Tally t("spectral", opt.tol);
    const int n = std::max(1, opt.instances / 5);
    for (int i = 0; i < n; ++i) {
        const int d = 1 + i % 2;
        const double s = uniform(rng, 1.05, 1.95);
        // Plane wave on the periodic grid.
        const int N = 64;
        const double h = 0.25;
        Index shape{N, d == 2 ? N : 1, 1};
        SpectralPlan plan(d, shape, h);
        int k0 = std::uniform_int_distribution<int>(1, N / 2 - 1)(rng);
        int k1 = d == 2 ? std::uniform_int_distribution<int>(0, N / 2 - 1)(rng) : 0;
        std::vector<double> f(plan.size());
        for (std::size_t j = 0; j < f.size(); ++j) {
            int j0 = int(j / shape[1]), j1 = int(j % shape[1]);
            f[j] = std::cos(2.0 * kPi * (double(k0) * j0 + double(k1) * j1) / N);
        }
        auto out = plan.apply(f, [s](double xi) { return std::pow(xi, s); });
        const double xi = 2.0 * kPi / (N * h) * std::sqrt(double(k0) * k0 + double(k1) * k1);
        const double lam = std::pow(xi, s);
        double worst = -kInf;
        for (std::size_t j = 0; j < f.size(); ++j) worst = std::max(worst, std::abs(out[j] - lam * f[j]) / lam);
        t.check(worst, "plane wave instance " + std::to_string(i));
    }
    for (int i = 0; i < n; ++i) {
        const int d = 1 + i % 2;
        const double s = uniform(rng, 1.05, 1.95);
        const double c = uniform(rng, 0.2, 2.0);
        const double sig = uniform(rng, 0.5, 1.0);
        const Grid g = d == 1 ? Grid::with_spacing(1, 16.0, 0.0625) : Grid::with_spacing(2, 12.0, 0.125);
        Tail tail;
        tail.growth = 0;
        tail.cone = ConeModel::polyhedral(d, {Vec{0, 0, 0}});
        tail.o_max = 1.0;
        GridFunction f = sample(g, [sig](const Vec& y) { return std::exp(-dot(y, y) / (2 * sig * sig)); }, tail);
        GridFunction lf = frac_laplacian(f, s);
        std::vector<double> rhs(f.size());
        for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] = f[k] + c * lf[k];
        SpectralOptions so;
        so.band_tol = kInf;
        GridFunction back = resolvent_apply(f.with_values(rhs), s, c, so);
        double worst = -kInf;
        for (std::size_t k = 0; k < rhs.size(); ++k) worst = std::max(worst, std::abs(back[k] - f[k]));
        // Truncating the |y|^{-d-s} tail of the fractional Laplacian at the box costs
        // about L^{-d-s} in the round trip.
        t.check(worst - std::pow(g.L, -double(d) - s), "resolvent instance " + std::to_string(i));
    }
    return t.r;
}

std::vector<SuiteResult> run_all_suites(const SuiteOptions& opt) {
    return {monotonicity_suite(opt), concavity_suite(opt),      capped_suite(opt),        near_pinned_suite(opt),
            localized_suite(opt),    envelope_suite(opt),       rearrangement_suite(opt), spectral_suite(opt)};
}

double fit_exponent(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw ValidationError("exponent fit needs at least two points");
    double mx = 0, my = 0;
    const double n = double(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]) / n;
        my += std::log(y[i]) / n;
    }
    double num = 0, den = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double dx = std::log(x[i]) - mx;
        num += dx * (std::log(y[i]) - my);
        den += dx * dx;
    }
    return num / den;
}

GapStudy near_pinned_gap(const GridFunction& f, const Vec& x, const OperatorParams& op, const std::vector<double>& eps) {
    GapStudy st;
    const double full = eval_ma(f, x, op, KernelSpec::full()).value;
    for (double e : eps) {
        st.eps.push_back(e);
        st.gap.push_back(std::abs(eval_ma(f, x, op, KernelSpec::near_pinned(e)).value - full));
    }
    st.exponent = fit_exponent(st.eps, st.gap);
    return st;
}

HolderStudy holder_study(const GridFunction& f, const Vec& x0, int axis, int samples, const OperatorParams& op) {
    const Grid& g = f.grid();
    if (axis < 0 || axis >= g.dim) throw ValidationError("axis out of range");
    if (samples < 10) throw ValidationError("need at least 10 samples along the line");
    Index start = g.multi(g.nearest(x0));
    if (start[axis] + samples > g.n[axis]) throw ValidationError("sample line leaves the grid");
    std::vector<double> v(samples);
    for (int j = 0; j < samples; ++j) {
        Index i = start;
        i[axis] += j;
        v[j] = eval_ma_node(f, g.index(i), op, KernelSpec::full()).value;
    }
    HolderStudy st;
    for (int m : {1, 2, 4, 8}) {
        double w = 0.0;
        for (int j = 0; j + m < samples; ++j) w = std::max(w, std::abs(v[j + m] - v[j]));
        st.delta.push_back(m * g.h);
        st.omega.push_back(w);
    }
    st.exponent = fit_exponent(st.delta, st.omega);
    return st;
}

}  // namespace nlma
