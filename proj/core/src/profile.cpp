#include "nlma/profile.hpp"

#include <algorithm>
#include <memory>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "nlma/rays.hpp"

namespace nlma {

std::string flag_tokens(unsigned flags) {
    std::string out;
    auto add_tok = [&](unsigned bit, const char* name) {
        if (!(flags & bit)) return;
        if (!out.empty()) out += ';';
        out += name;
    };
    add_tok(kNonconvex, "nonconvex");
    add_tok(kFatLevel, "fat-level");
    add_tok(kConeUnbounded, "cone-unbounded");
    add_tok(kHessianFallback, "hessian-fallback");
    return out;
}

double RayProfile::radius(double t) const {
    if (t <= 0.0) return 0.0;
    const std::size_t S = rho.size() - 1;
    if (g[1] > 0.0 && t <= g[1]) {
        double q = t / g[1];
        return rho[1] * (near_p == 2.0 ? std::sqrt(q) : std::pow(q, 1.0 / near_p));
    }
    auto it = std::lower_bound(g.begin() + 1, g.end(), t);
    if (it == g.end()) return far_slope > 0.0 ? rho[S] + (t - g[S]) / far_slope : kInf;
    std::size_t j = std::size_t(it - g.begin());
    return rho[j - 1] + (t - g[j - 1]) / (g[j] - g[j - 1]) * (rho[j] - rho[j - 1]);
}

namespace {

// int_a^b (A + sigma rho) rho^{-1-s} d rho, 0 < a < b.
double linear_piece(double A, double sigma, double a, double b, double s) {
    return A * (std::pow(a, -s) - std::pow(b, -s)) / s + sigma * (std::pow(b, 1.0 - s) - std::pow(a, 1.0 - s)) / (1.0 - s);
}

}  // namespace

double RayProfile::weighted_integral(double a, double b, double s) const {
    if (!(b > a)) return 0.0;
    const std::size_t S = rho.size() - 1;
    double total = 0.0;
    // Power-law piece on [0, rho1].
    double lo = a, hi = std::min(b, rho[1]);
    if (hi > lo && g[1] > 0.0) {
        double c = g[1] / std::pow(rho[1], near_p);
        if (near_p <= s && lo == 0.0) return kInf;
        if (near_p == s)
            total += c * std::log(hi / lo);
        else
            total += c * (std::pow(hi, near_p - s) - std::pow(lo, near_p - s)) / (near_p - s);
    }
    for (std::size_t j = 1; j < S && rho[j] < b; ++j) {
        double pa = std::max(a, rho[j]), pb = std::min(b, rho[j + 1]);
        if (pb <= pa) continue;
        double sigma = (g[j + 1] - g[j]) / (rho[j + 1] - rho[j]);
        total += linear_piece(g[j] - sigma * rho[j], sigma, pa, pb, s);
    }
    if (b > rho[S]) {
        double pa = std::max(a, rho[S]);
        if (b == kInf) {
            if (far_slope > 0.0 && s <= 1.0) return kInf;
            double A = g[S] - far_slope * rho[S];
            total += A * std::pow(pa, -s) / s + far_slope * std::pow(pa, 1.0 - s) / (s - 1.0);
        } else {
            total += linear_piece(g[S] - far_slope * rho[S], far_slope, pa, b, s);
        }
    }
    return total;
}

SectionProfile SectionProfile::build(const GridFunction& f, std::size_t node, const Vec& b, const ProfileOptions& opt) {
    const Grid& grid = f.grid();
    SectionProfile p;
    p.d_ = grid.dim;
    p.x_ = grid.coord(node);
    p.b_ = b;
    const int d = grid.dim;
    DirectionSet dirs = make_directions(d, d == 1 ? 2 : (d == 2 ? opt.rays2 : opt.rays3));
    const double diag = 2.0 * grid.L * std::sqrt(double(d));
    const double reach = std::max(opt.far_factor * diag, opt.min_reach);
    std::vector<double> rho{0.0, grid.h};
    while (rho.back() < reach) rho.push_back(rho.back() * opt.ratio);
    const double fx = f[node];
    const double level_tol = 1e-13 * f.scale();

    p.rays_.resize(dirs.size());
    for (std::size_t r = 0; r < dirs.size(); ++r) {
        RayProfile& ray = p.rays_[r];
        ray.dir = dirs.dirs[r];
        ray.weight = dirs.weights[r];
        ray.rho = rho;
        ray.g.resize(rho.size());
        ray.g[0] = 0.0;
        const double bt = dot(b, ray.dir);
        double run = 0.0;
        for (std::size_t j = 1; j < rho.size(); ++j) {
            double v = f.eval(axpy(p.x_, rho[j], ray.dir)) - fx - rho[j] * bt;
            if (v <= level_tol) v = 0.0;
            run = std::max(run, v);
            ray.g[j] = run;
        }
        if (opt.kink && ray.g[1] > 0.0 && ray.g[2] > ray.g[1]) {
            double q = std::log(ray.g[2] / ray.g[1]) / std::log(rho[2] / rho[1]);
            ray.near_p = std::clamp(q, 1.0, 2.0);
        }
        const std::size_t S = rho.size() - 1;
        double slope = (ray.g[S] - ray.g[S - 1]) / (rho[S] - rho[S - 1]);
        ray.far_slope = slope > 1e-9 * std::max(1.0, norm(b)) ? slope : 0.0;
    }
    if (f.cone().present() && !f.cone().interior_slope(b)) p.flags_ |= kConeUnbounded;
    p.level_tol_ = 1e-10 * f.scale();
    p.finish();
    return p;
}

SectionProfile SectionProfile::radial(int d, const std::function<double(double)>& g, double rho_max, double h) {
    SectionProfile p;
    p.d_ = d;
    DirectionSet dirs = make_directions(d, d == 1 ? 2 : (d == 2 ? 16 : 8));
    std::vector<double> rho{0.0, h};
    while (rho.back() < rho_max) rho.push_back(rho.back() * 1.05);
    std::vector<double> gv(rho.size());
    double run = 0.0;
    for (std::size_t j = 0; j < rho.size(); ++j) {
        run = std::max(run, j == 0 ? 0.0 : g(rho[j]));
        gv[j] = run;
    }
    const std::size_t S = rho.size() - 1;
    double slope = (gv[S] - gv[S - 1]) / (rho[S] - rho[S - 1]);
    for (std::size_t r = 0; r < dirs.size(); ++r) {
        RayProfile ray;
        ray.dir = dirs.dirs[r];
        ray.weight = dirs.weights[r];
        ray.rho = rho;
        ray.g = gv;
        ray.far_slope = slope > 1e-12 ? slope : 0.0;
        p.rays_.push_back(std::move(ray));
    }
    p.finish();
    return p;
}

void SectionProfile::finish() {
    t_inf_ = kInf;
    bool flat_start = false;
    for (const auto& ray : rays_) {
        if (ray.far_slope == 0.0) t_inf_ = std::min(t_inf_, ray.g.back());
        if (ray.far_slope == 0.0 && ray.g.back() <= level_tol_) t_inf_ = 0.0;
        if (ray.g[1] == 0.0) flat_start = true;
    }
    if (t_inf_ < kInf) flags_ |= kConeUnbounded;
    if (t_inf_ > 0.0 && (t_inf_ < kInf || flat_start)) flags_ |= kFatLevel;
    if (flat_start && t_inf_ > 0.0) flags_ |= kHessianFallback;
}

double SectionProfile::measure(double t) const {
    if (t > t_inf_) return kInf;
    double m = 0.0;
    for (const auto& ray : rays_) {
        double r = ray.radius(t);
        if (r == kInf) return kInf;
        m += ray.weight * std::pow(r, d_);
    }
    return m / d_;
}

double SectionProfile::measure_outside(double t, double eps) const {
    if (t > t_inf_) return kInf;
    double m = 0.0, e = std::pow(eps, d_);
    for (const auto& ray : rays_) {
        double r = ray.radius(t);
        if (r == kInf) return kInf;
        m += ray.weight * std::max(0.0, std::pow(r, d_) - e);
    }
    return m / d_;
}

double SectionProfile::contact_measure() const {
    double m = 0.0;
    for (const auto& ray : rays_) {
        std::size_t j = 0;
        while (j + 1 < ray.g.size() && ray.g[j + 1] == 0.0) ++j;
        if (j + 1 == ray.g.size() && ray.far_slope == 0.0) return kInf;
        m += ray.weight * std::pow(ray.rho[j], d_);
    }
    return m / d_;
}

void SectionProfile::sweep(const std::vector<double>& t, std::vector<double>& mu, double eps,
                           std::vector<double>* mu_out) const {
    const std::size_t Q = t.size();
    mu.assign(Q, 0.0);
    if (mu_out) mu_out->assign(Q, 0.0);
    const double e = std::pow(eps, d_);
    for (const auto& ray : rays_) {
        const std::size_t S = ray.rho.size() - 1;
        const double g1 = ray.g[1];
        const double inv_p = 1.0 / ray.near_p;
        std::size_t j = 1;
        for (std::size_t q = 0; q < Q; ++q) {
            const double tq = t[q];
            double r;
            if (g1 > 0.0 && tq <= g1) {
                double z = tq / g1;
                r = ray.rho[1] * (ray.near_p == 2.0 ? std::sqrt(z) : std::pow(z, inv_p));
            } else {
                while (j <= S && ray.g[j] < tq) ++j;
                if (j <= S)
                    r = ray.rho[j - 1] + (tq - ray.g[j - 1]) / (ray.g[j] - ray.g[j - 1]) * (ray.rho[j] - ray.rho[j - 1]);
                else
                    r = ray.far_slope > 0.0 ? ray.rho[S] + (tq - ray.g[S]) / ray.far_slope : kInf;
            }
            double rd = d_ == 1 ? r : (d_ == 2 ? r * r : r * r * r);
            mu[q] += ray.weight * rd;
            if (mu_out) (*mu_out)[q] += ray.weight * std::max(0.0, rd - e);
        }
    }
    for (std::size_t q = 0; q < Q; ++q) {
        mu[q] /= d_;
        if (mu_out) (*mu_out)[q] /= d_;
    }
}

namespace {

constexpr double kHeadLevel = 1e-12;
constexpr double kTailLevel = 1e12;
constexpr double kPanelRatio = 1.12;

// Fixed level panels between kHeadLevel and kTailLevel, GL-4 on each.
struct PanelTable {
    std::vector<double> edges;
    std::vector<double> gx, gw;
    PanelTable() {
        for (double t = kHeadLevel; t < kTailLevel; t *= kPanelRatio) edges.push_back(t);
        edges.push_back(kTailLevel);
        gauss_legendre01(4, gx, gw);
    }
};

const PanelTable& panels() {
    static const PanelTable table;
    return table;
}

// Quadrature nodes in t for int_0^T F(t) dt with F ~ t^{-s/2} at 0 and ~ t^{-s} at
// infinity (T = inf), ascending. Panels are split at the sorted levels in breaks.
void level_nodes(double s, double T, bool with_head, const std::vector<double>& breaks, std::vector<double>& t,
                 std::vector<double>& w) {
    t.clear();
    w.clear();
    std::vector<double> x, xw;
    gauss_legendre01(16, x, xw);
    if (with_head) {
        // t = head x^a, a = 2/(2-s); nodes that underflow to 0 are dropped.
        const double head = std::min(kHeadLevel, T);
        const double a = 2.0 / (2.0 - s);
        for (std::size_t i = 0; i < x.size(); ++i) {
            double ti = head * std::pow(x[i], a);
            if (ti <= 0.0) continue;
            t.push_back(ti);
            w.push_back(xw[i] * head * a * std::pow(x[i], a - 1.0));
        }
    }
    if (T <= kHeadLevel) return;
    const auto& P = panels();
    auto piece = [&](double lo, double hi) {
        for (std::size_t i = 0; i < P.gx.size(); ++i) {
            t.push_back(lo + (hi - lo) * P.gx[i]);
            w.push_back((hi - lo) * P.gw[i]);
        }
    };
    auto br = std::upper_bound(breaks.begin(), breaks.end(), kHeadLevel);
    for (std::size_t k = 0; k + 1 < P.edges.size(); ++k) {
        double lo = P.edges[k], hi = std::min(P.edges[k + 1], T);
        if (hi <= lo) break;
        for (; br != breaks.end() && *br < hi; ++br) {
            piece(lo, *br);
            lo = *br;
        }
        piece(lo, hi);
        if (hi == T) return;
    }
    if (T < kInf) {
        // Finite cutoff beyond the panel range.
        for (std::size_t i = 0; i < x.size(); ++i) {
            t.push_back(kTailLevel + (T - kTailLevel) * x[i]);
            w.push_back((T - kTailLevel) * xw[i]);
        }
        return;
    }
    // t = tail x^{-c}, c = 1/(s-1), ascending in t for descending x.
    const double c = 1.0 / (s - 1.0);
    for (std::size_t i = x.size(); i-- > 0;) {
        t.push_back(kTailLevel * std::pow(x[i], -c));
        w.push_back(xw[i] * kTailLevel * c * std::pow(x[i], -c - 1.0));
    }
}

}  // namespace

bool SectionProfile::head_integral(const OperatorParams& op, const KernelSpec& k, double& out) const {
    // Closed form on [0, H] when every ray is still in its power-law piece there, so that
    // mu(t) = A t^{d/p}.
    const double H = kHeadLevel;
    const double p = rays_.front().near_p;
    double A = 0.0;
    double rmax = 0.0;
    for (const auto& ray : rays_) {
        if (!(ray.g[1] >= H) || ray.near_p != p) return false;
        A += ray.weight * std::pow(ray.rho[1], d_) * std::pow(ray.g[1], -d_ / p);
        rmax = std::max(rmax, ray.rho[1] * std::pow(H / ray.g[1], 1.0 / p));
    }
    A /= d_;
    const double s = op.s, C = op.C_ma, q = double(d_) / p;
    const double muH = A * std::pow(H, q);
    switch (k.variant) {
        case KernelSpec::Variant::Full:
            if (p <= s) return false;
            out = C * std::pow(A, -s / d_) * std::pow(H, 1.0 - s / p) / (1.0 - s / p);
            return true;
        case KernelSpec::Variant::Localized: {
            const double ball_R = op.ball * std::pow(k.param, d_);
            if (p <= s || muH >= ball_R) return false;
            out = C * (std::pow(A, -s / d_) * std::pow(H, 1.0 - s / p) / (1.0 - s / p) - std::pow(ball_R, -s / d_) * H);
            return true;
        }
        case KernelSpec::Variant::Capped: {
            const double n = k.param;
            const double mn = op.ball * std::pow(n, -double(d_) / (d_ + s));
            if (muH > mn) return false;
            out = H * (n * mn + C * std::pow(mn, -s / d_)) - n * A * std::pow(H, 1.0 + q) / (1.0 + q);
            return true;
        }
        case KernelSpec::Variant::NearPinned:
            if (rmax > k.param) return false;
            out = C * std::pow(op.ball * std::pow(k.param, d_), -s / d_) * H;
            return true;
    }
    return false;
}

double SectionProfile::integrate(const OperatorParams& op, const KernelSpec& k) const {
    const double s = op.s;
    const double e = -s / d_;
    const double C = op.C_ma;
    double near = 0.0;
    const bool pinned = k.variant == KernelSpec::Variant::NearPinned;
    if (pinned) {
        for (const auto& ray : rays_) {
            double v = ray.weighted_integral(0.0, k.param, s);
            if (v == kInf) return kInf;
            near += ray.weight * v;
        }
    }
    if (all_infinite()) return near;

    double head = 0.0;
    const bool closed_head = t_inf_ > kHeadLevel && head_integral(op, k, head);
    std::vector<double> t, w, mu, mu_out;
    // With few rays mu is smooth only between sample levels; split the panels there.
    std::vector<double> breaks;
    if (rays_.size() <= 2) {
        for (const auto& ray : rays_)
            for (double gj : ray.g)
                if (gj > 0.0) breaks.push_back(gj);
        std::sort(breaks.begin(), breaks.end());
        breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    }
    level_nodes(s, t_inf_, !closed_head, breaks, t, w);
    sweep(t, mu, pinned ? k.param : 0.0, pinned ? &mu_out : nullptr);

    double total = 0.0;
    switch (k.variant) {
        case KernelSpec::Variant::Full:
            for (std::size_t q = 0; q < t.size(); ++q) {
                if (mu[q] == kInf) continue;
                if (mu[q] <= 0.0) return kInf;
                total += w[q] * std::pow(mu[q], e);
            }
            return C * total + head;
        case KernelSpec::Variant::Capped: {
            const double n = k.param;
            const double mn = op.ball * std::pow(n, -double(d_) / (d_ + s));
            const double top = C * std::pow(mn, e);
            for (std::size_t q = 0; q < t.size(); ++q) {
                if (mu[q] == kInf) continue;
                total += w[q] * (mu[q] >= mn ? C * std::pow(mu[q], e) : n * (mn - mu[q]) + top);
            }
            return total + head;
        }
        case KernelSpec::Variant::Localized: {
            const double floor = std::pow(op.ball * std::pow(k.param, d_), e);
            for (std::size_t q = 0; q < t.size(); ++q) {
                if (mu[q] == kInf) continue;
                if (mu[q] <= 0.0) return kInf;
                total += w[q] * std::max(0.0, std::pow(mu[q], e) - floor);
            }
            return C * total + head;
        }
        case KernelSpec::Variant::NearPinned: {
            const double be = op.ball * std::pow(k.param, d_);
            for (std::size_t q = 0; q < t.size(); ++q) {
                if (mu_out[q] == kInf) continue;
                total += w[q] * std::pow(be + mu_out[q], e);
            }
            return near + C * total + head;
        }
    }
    return total;
}

RadialProfile::RadialProfile(int d, std::function<double(double)> mu, double t_inf, bool zero)
    : d_(d), mu_(std::move(mu)), t_inf_(t_inf), zero_(zero) {}

double RadialProfile::value(double r) const {
    if (zero_ || r <= 0.0) return 0.0;
    const double m = unit_ball_volume(d_) * std::pow(r, d_);
    double lo = 0.0, hi = 1.0;
    while (mu_(hi) < m) {
        if (hi >= t_inf_) return t_inf_;
        lo = hi;
        hi = std::min(4.0 * hi, t_inf_);
        if (hi > 1e300) return kInf;
    }
    while (lo == 0.0 && mu_(0.25 * hi) >= m && hi > 1e-300) hi *= 0.25;
    if (lo == 0.0) lo = 0.25 * hi;
    if (mu_(lo) >= m) return lo;
    // mu is continuous except at fat levels; the bracket [lo, hi] keeps mu(lo) < m <= mu(hi).
    auto fn = [&](double t) { return mu_(t) - m; };
    boost::uintmax_t iters = 200;
    auto res = boost::math::tools::toms748_solve(fn, lo, hi, boost::math::tools::eps_tolerance<double>(48), iters);
    return res.second;
}

std::vector<std::pair<double, double>> RadialProfile::table(double r0, double r1, int n) const {
    std::vector<std::pair<double, double>> out;
    for (int i = 0; i < n; ++i) {
        double r = n == 1 ? r0 : r0 * std::pow(r1 / r0, double(i) / (n - 1));
        out.emplace_back(r, value(r));
    }
    return out;
}

RadialProfile radial_rearrangement(const SectionProfile& p) {
    if (p.all_infinite()) return RadialProfile(p.dim(), [](double) { return kInf; }, 0.0, true);
    auto shared = std::make_shared<SectionProfile>(p);
    return RadialProfile(p.dim(), [shared](double t) { return shared->measure(t); }, p.t_inf());
}

double rearranged_integral(const RadialProfile& v, const OperatorParams& op) {
    if (v.zero()) return 0.0;
    const int d = op.d;
    const double s = op.s;
    const double pref = d * op.ball;
    // Small radius end: v ~ A r^p.
    double r0 = 1e-4;
    while (v.value(r0) > 1e-9 && r0 > 1e-12) r0 *= 0.1;
    double v0 = v.value(r0), vh = v.value(0.5 * r0);
    double head = 0.0;
    if (v0 > 0.0 && vh > 0.0) {
        double p = std::clamp(std::log2(v0 / vh), 1.0, 2.0);
        if (p <= s) return kInf;
        head = v0 * std::pow(r0, -s) / (p - s);
    }
    // Large radius end: v affine in r, or constant past a finite cutoff.
    double R = 1.0;
    double vR = v.value(R);
    for (int it = 0; it < 200; ++it) {
        double v2 = v.value(2.0 * R);
        if (v2 == kInf) return kInf;
        double v4 = v.value(4.0 * R);
        // Affine once successive slopes agree.
        double s1 = (v2 - vR) / R, s2 = (v4 - v2) / (2.0 * R);
        if (R > 1e3 && std::abs(s2 - s1) <= 1e-6 * std::max(std::abs(s2), 1e-300) + 1e-300) break;
        if (R > 1e9) break;
        R *= 2.0;
        vR = v2;
    }
    double A = (v.value(2.0 * R) - vR) / R;
    double B = vR - A * R;
    double tail = A * std::pow(R, 1.0 - s) / (s - 1.0) + B * std::pow(R, -s) / s;
    auto integrand = [&](double u) {
        double r = std::exp(u);
        return v.value(r) * std::exp(-s * u);
    };
    // Fixed panels in log r: v has a derivative kink at every sample level, which defeats
    // error estimates of adaptive rules.
    const double u0 = std::log(r0), u1 = std::log(R);
    const int panels = std::max(1, int(std::ceil((u1 - u0) / 0.05)));
    double mid = 0.0;
    for (int i = 0; i < panels; ++i) {
        double a = u0 + (u1 - u0) * i / panels, b = u0 + (u1 - u0) * (i + 1) / panels;
        mid += boost::math::quadrature::gauss<double, 7>::integrate(integrand, a, b);
    }
    return pref * (head + mid + tail);
}

}  // namespace nlma
