#include "nlma/spectral.hpp"

#include <algorithm>
#include <mutex>
#include <sstream>

#include <fftw3.h>

#include "nlma/rays.hpp"

namespace nlma {

double frac_laplacian_constant(int d, double s) {
    return s * std::pow(2.0, s - 1.0) * std::tgamma(0.5 * (d + s)) / (std::pow(kPi, 0.5 * d) * std::tgamma(1.0 - 0.5 * s));
}

namespace {

// FFTW's planner is not reentrant.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

struct SpectralPlan::Plans {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
};

SpectralPlan::SpectralPlan(int d, Index n, double h) : d_(d), n_(n), h_(h), plans_(std::make_unique<Plans>()) {
    if (d < 1 || d > 3) throw ValidationError("dimension must be 1, 2 or 3");
    for (int a = 0; a < d; ++a)
        if (n[a] < 2 || n[a] % 2) throw ValidationError("periodic grid sizes must be even");
    for (int a = d; a < 3; ++a) n_[a] = 1;
    int dims[3] = {n_[0], n_[1], n_[2]};
    double* in = fftw_alloc_real(size());
    fftw_complex* out = fftw_alloc_complex(spectrum_size());
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        plans_->fwd = fftw_plan_dft_r2c(d_, dims, in, out, FFTW_ESTIMATE);
        plans_->bwd = fftw_plan_dft_c2r(d_, dims, out, in, FFTW_ESTIMATE);
    }
    fftw_free(in);
    fftw_free(out);
}

SpectralPlan::~SpectralPlan() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plans_->fwd);
    fftw_destroy_plan(plans_->bwd);
}

std::size_t SpectralPlan::spectrum_size() const {
    std::size_t m = 1;
    for (int a = 0; a < d_ - 1; ++a) m *= std::size_t(n_[a]);
    return m * std::size_t(n_[d_ - 1] / 2 + 1);
}

double SpectralPlan::frequency(std::size_t k) const {
    const int last = n_[d_ - 1] / 2 + 1;
    double xi2 = 0.0;
    std::size_t rest = k;
    for (int a = d_ - 1; a >= 0; --a) {
        int len = a == d_ - 1 ? last : n_[a];
        int i = int(rest % std::size_t(len));
        rest /= std::size_t(len);
        int kk = (a == d_ - 1 || i <= n_[a] / 2) ? i : i - n_[a];
        double xi = 2.0 * kPi * kk / (n_[a] * h_);
        xi2 += xi * xi;
    }
    return std::sqrt(xi2);
}

std::vector<std::complex<double>> SpectralPlan::forward(const std::vector<double>& field) const {
    if (field.size() != size()) throw ValidationError("field size does not match the spectral plan");
    double* in = fftw_alloc_real(size());
    fftw_complex* out = fftw_alloc_complex(spectrum_size());
    std::copy(field.begin(), field.end(), in);
    fftw_execute_dft_r2c(plans_->fwd, in, out);
    std::vector<std::complex<double>> c(spectrum_size());
    for (std::size_t k = 0; k < c.size(); ++k) c[k] = {out[k][0], out[k][1]};
    fftw_free(in);
    fftw_free(out);
    return c;
}

std::vector<double> SpectralPlan::inverse(const std::vector<std::complex<double>>& coeffs) const {
    if (coeffs.size() != spectrum_size()) throw ValidationError("spectrum size does not match the spectral plan");
    double* outr = fftw_alloc_real(size());
    fftw_complex* in = fftw_alloc_complex(spectrum_size());
    for (std::size_t k = 0; k < coeffs.size(); ++k) {
        in[k][0] = coeffs[k].real();
        in[k][1] = coeffs[k].imag();
    }
    fftw_execute_dft_c2r(plans_->bwd, in, outr);
    std::vector<double> v(outr, outr + size());
    const double inv = 1.0 / double(size());
    for (double& x : v) x *= inv;
    fftw_free(outr);
    fftw_free(in);
    return v;
}

std::vector<double> SpectralPlan::apply(const std::vector<double>& field, const std::function<double(double)>& m) const {
    auto c = forward(field);
    for (std::size_t k = 0; k < c.size(); ++k) c[k] *= m(frequency(k));
    return inverse(c);
}

SpectralField SpectralField::from_values(std::shared_ptr<const SpectralPlan> plan, std::vector<double> v) {
    SpectralField f;
    f.coeffs = plan->forward(v);
    f.values = std::move(v);
    f.plan = std::move(plan);
    return f;
}

namespace {

// J(gamma) = int_0^inf (q(rho, beta) + q(rho, -beta) - 2) rho^{-1-s} d rho with
// q(rho, beta) = sqrt(1 + 2 beta rho + rho^2) and gamma^2 = 1 - beta^2. Tabulated on
// gamma_j = (j/N)^2 so the kink at gamma = 0 is resolved.
class EllipticTable {
public:
    explicit EllipticTable(double s) : s_(s), v_(kSize + 1) {
        for (int j = 0; j <= kSize; ++j) {
            double t = double(j) / kSize;
            v_[j] = integral(t * t);
        }
    }
    double s() const { return s_; }
    double operator()(double gamma) const {
        double t = std::sqrt(std::clamp(gamma, 0.0, 1.0)) * kSize;
        int j = std::min(int(t), kSize - 1);
        double f = t - j;
        return (1.0 - f) * v_[j] + f * v_[j + 1];
    }

private:
    static constexpr int kSize = 512;

    // Composite Gauss-Legendre in u = log rho, panels graded geometrically toward the
    // near-kink at rho = 1.
    double integral(double gamma) const {
        static const std::vector<double> gx = [] {
            std::vector<double> x, w;
            gauss_legendre01(8, x, w);
            return x;
        }();
        static const std::vector<double> gw = [] {
            std::vector<double> x, w;
            gauss_legendre01(8, x, w);
            return w;
        }();
        const double b = std::sqrt(std::max(0.0, 1.0 - gamma * gamma));
        auto delta = [b, gamma](double r) {
            if (r < 1e-4) return gamma * gamma * r * r;
            double u = 1.0 + b * r, v = 1.0 - b * r, g2 = gamma * gamma * r * r;
            return std::sqrt(u * u + g2) + std::sqrt(v * v + g2) - 2.0;
        };
        const double umax = std::log(1e8);
        double total = 0.0;
        for (double sign : {-1.0, 1.0}) {
            double lo = 1e-9;
            while (lo < umax) {
                double hi = std::min(umax, lo * 1.3);
                for (std::size_t q = 0; q < gx.size(); ++q) {
                    double u = sign * (lo + (hi - lo) * gx[q]);
                    double r = std::exp(u);
                    total += (hi - lo) * gw[q] * delta(r) * std::exp(-s_ * u);
                }
                lo = hi;
            }
        }
        const double r0 = 1e-8, r1 = 1e8;
        total += gamma * gamma * std::pow(r0, 2.0 - s_) / (2.0 - s_);
        total += 2.0 * std::pow(r1, 1.0 - s_) / (s_ - 1.0) - 2.0 * std::pow(r1, -s_) / s_;
        return total;
    }

    double s_;
    std::vector<double> v_;
};

const EllipticTable& elliptic_table(double s) {
    static std::mutex m;
    static std::vector<std::unique_ptr<EllipticTable>> cache;
    std::lock_guard<std::mutex> lock(m);
    for (const auto& t : cache)
        if (t->s() == s) return *t;
    cache.push_back(std::make_unique<EllipticTable>(s));
    return *cache.back();
}

const DirectionSet& cone_directions(int d) {
    static const DirectionSet sets[3] = {make_directions(1, 2), make_directions(2, 64), make_directions(3, 16)};
    return sets[d - 1];
}

}  // namespace

double cone_frac_laplacian(const ConeModel& cone, const Vec& x, double s, double c) {
    if (!cone.present()) return 0.0;
    // A single slope is affine.
    if (cone.kind() == ConeModel::Kind::Polyhedral && cone.slopes().size() == 1) return 0.0;
    const int d = cone.dim();
    // Antipodal pairs give the same symmetric difference, so 1D and 2D use half the set.
    const DirectionSet& dirs = cone_directions(d);
    const std::size_t count = d == 3 ? dirs.size() : dirs.size() / 2;
    const double wmul = d == 3 ? 1.0 : 2.0;
    double total = 0.0;
    if (cone.kind() == ConeModel::Kind::Ellipsoidal) {
        // sqrt(c^2 + (x + r th)^T M (x + r th)) = sqrt(a) q(r sqrt(k/a), beta)
        const EllipticTable& table = elliptic_table(s);
        const Mat& M = cone.matrix();
        const double a = c * c + quad_form(M, x, d);
        for (std::size_t i = 0; i < count; ++i) {
            const Vec& th = dirs.dirs[i];
            double k = quad_form(M, th, d);
            double bx = 0.0;
            for (int p = 0; p < d; ++p)
                for (int q = 0; q < d; ++q) bx += x[p] * M[p][q] * th[q];
            double beta2 = bx * bx / (a * k);
            double gamma = std::sqrt(std::max(0.0, 1.0 - beta2));
            total += wmul * dirs.weights[i] * std::sqrt(a) * std::pow(a / k, -0.5 * s) * table(gamma);
        }
        return -0.5 * frac_laplacian_constant(d, s) * total;
    }
    static const std::vector<double> gx = [] {
        std::vector<double> x, w;
        gauss_legendre01(6, x, w);
        return x;
    }();
    static const std::vector<double> gw = [] {
        std::vector<double> x, w;
        gauss_legendre01(6, x, w);
        return w;
    }();
    const double psi0 = cone.smooth(x, c);
    const double ra = 1e-3 * c;
    const double rb = 1e3 * (c + norm(x));
    const double ua = std::log(ra), ub = std::log(rb);
    const int panels = int(std::ceil((ub - ua) / 0.5));
    const double du = (ub - ua) / panels;
    auto delta2 = [&](const Vec& th, double r) {
        return cone.smooth(axpy(x, r, th), c) + cone.smooth(axpy(x, -r, th), c) - 2.0 * psi0;
    };
    for (std::size_t i = 0; i < count; ++i) {
        const Vec& th = dirs.dirs[i];
        double acc = 0.0;
        for (int p = 0; p < panels; ++p)
            for (std::size_t q = 0; q < gx.size(); ++q) {
                double u = ua + du * (p + gx[q]);
                double r = std::exp(u);
                acc += du * gw[q] * delta2(th, r) * std::exp(-s * u);
            }
        // Quadratic contact below ra, affine growth above rb.
        double k2 = delta2(th, ra) / (ra * ra);
        acc += k2 * std::pow(ra, 2.0 - s) / (2.0 - s);
        double d1 = delta2(th, rb), d0 = delta2(th, 0.5 * rb);
        double alpha = (d1 - d0) / (0.5 * rb), beta = d1 - alpha * rb;
        acc += alpha * std::pow(rb, 1.0 - s) / (s - 1.0) + beta * std::pow(rb, -s) / s;
        total += wmul * dirs.weights[i] * acc;
    }
    return -0.5 * frac_laplacian_constant(d, s) * total;
}

namespace {

// Periodic box of about twice the width of the grid box, placed so that reflections of
// the grid box are symmetries of the periodic grid.
struct PaddedBox {
    int d;
    Index N{1, 1, 1};
    Index offset{0, 0, 0};
    double h;
    std::shared_ptr<const SpectralPlan> plan;

    explicit PaddedBox(const Grid& g) : d(g.dim), h(g.h) {
        for (int a = 0; a < d; ++a) {
            int n = g.n[a];
            N[a] = n % 2 == 0 ? 2 * n : 2 * (n - 1);
            offset[a] = n % 2 == 0 ? n / 2 : (n - 1) / 2;
        }
        static std::mutex cache_mutex;
        static std::vector<std::shared_ptr<const SpectralPlan>> cache;
        std::lock_guard<std::mutex> lock(cache_mutex);
        for (const auto& p : cache)
            if (p->dim() == d && p->shape() == N && p->spacing() == h) plan = p;
        if (!plan) {
            plan = std::make_shared<SpectralPlan>(d, N, h);
            cache.push_back(plan);
        }
    }
    std::size_t size() const { return std::size_t(N[0]) * N[1] * N[2]; }
    std::size_t index(const Index& j) const { return (std::size_t(j[0]) * N[1] + j[1]) * N[2] + j[2]; }
    Index multi(std::size_t k) const {
        Index j{0, 0, 0};
        j[2] = int(k % N[2]);
        k /= N[2];
        j[1] = int(k % N[1]);
        j[0] = int(k / N[1]);
        return j;
    }
    Vec coord(const Grid& g, std::size_t k) const {
        Index j = multi(k);
        Vec y{0, 0, 0};
        for (int a = 0; a < d; ++a) y[a] = -g.L + (j[a] - offset[a]) * h;
        return y;
    }
    std::size_t from_grid(const Grid& g, std::size_t k) const {
        Index i = g.multi(k);
        for (int a = 0; a < d; ++a) i[a] += offset[a];
        return index(i);
    }
};

int band_nodes(const Grid& g, double band) {
    int nmin = g.n[0];
    for (int a = 1; a < g.dim; ++a) nmin = std::min(nmin, g.n[a]);
    return std::max(2, int(std::lround(band * (nmin - 1) / 2.0)));
}

double taper(int depth, int band) {
    if (depth >= band) return 1.0;
    double z = std::sin(0.5 * kPi * double(depth) / band);
    return z * z;
}

// Product of 1D tapers toward the faces of an index box.
double window(const Index& i, const Index& n, int d, int band) {
    double w = 1.0;
    for (int a = 0; a < d; ++a) w *= taper(std::min(i[a], n[a] - 1 - i[a]), band);
    return w;
}

struct BandSplit {
    double mean = 0.0;
    double residual = 0.0;
};

BandSplit band_stats(const Grid& g, const std::vector<double>& v, int band) {
    BandSplit b;
    double sum = 0.0;
    std::size_t cnt = 0;
    for (std::size_t k = 0; k < v.size(); ++k)
        if (g.depth(k) < band) {
            sum += v[k];
            ++cnt;
        }
    b.mean = cnt ? sum / cnt : 0.0;
    for (std::size_t k = 0; k < v.size(); ++k)
        if (g.depth(k) < band) b.residual = std::max(b.residual, std::abs(v[k] - b.mean));
    return b;
}

[[noreturn]] void band_error(double residual, double limit) {
    std::ostringstream os;
    os << "bounded part does not settle in the boundary band: residual " << residual << " exceeds " << limit;
    throw ValidationError(os.str());
}

// Embeds (v - mean) * window into the padded box, zero elsewhere.
std::vector<double> embed(const PaddedBox& P, const Grid& g, const std::vector<double>& v, double mean, int band) {
    std::vector<double> out(P.size(), 0.0);
    for (std::size_t k = 0; k < v.size(); ++k)
        out[P.from_grid(g, k)] = (v[k] - mean) * window(g.multi(k), g.n, g.dim, band);
    return out;
}

std::vector<double> extract(const PaddedBox& P, const Grid& g, const std::vector<double>& pad, double add) {
    std::vector<double> out(g.size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = pad[P.from_grid(g, k)] + add;
    return out;
}

Tail bounded_tail() {
    Tail t;
    t.growth = 0;
    return t;
}

}  // namespace

GridFunction frac_laplacian(const GridFunction& f, double s, const SpectralOptions& opt) {
    if (!(s > 0.0 && s < 2.0)) throw ValidationError("order s must lie in (0, 2)");
    const Grid& g = f.grid();
    const ConeModel& cone = f.cone();
    std::vector<double> bounded(f.size());
    for (std::size_t k = 0; k < f.size(); ++k) bounded[k] = f[k] - (cone.present() ? cone.smooth(g.coord(k), 1.0) : 0.0);
    const int band = band_nodes(g, opt.band);
    BandSplit bs = band_stats(g, bounded, band);
    if (bs.residual > opt.band_tol * f.scale()) band_error(bs.residual, opt.band_tol * f.scale());
    PaddedBox P(g);
    auto spec = P.plan->apply(embed(P, g, bounded, bs.mean, band), [s](double xi) { return std::pow(xi, s); });
    std::vector<double> out = extract(P, g, spec, 0.0);
    if (cone.present())
        for (std::size_t k = 0; k < out.size(); ++k) out[k] += cone_frac_laplacian(cone, g.coord(k), s);
    return GridFunction(g, std::move(out), bounded_tail());
}

GridFunction resolvent_apply(const GridFunction& gf, double s, double coef, const SpectralOptions& opt) {
    if (!(s > 0.0 && s < 2.0)) throw ValidationError("order s must lie in (0, 2)");
    if (!(coef >= 0.0)) throw ValidationError("resolvent coefficient must be nonnegative");
    const Grid& g = gf.grid();
    const int band = band_nodes(g, opt.band);
    BandSplit bs = band_stats(g, gf.values(), band);
    if (bs.residual > opt.band_tol * gf.scale()) band_error(bs.residual, opt.band_tol * gf.scale());
    PaddedBox P(g);
    auto spec = P.plan->apply(embed(P, g, gf.values(), bs.mean, band),
                              [s, coef](double xi) { return 1.0 / (1.0 + coef * std::pow(xi, s)); });
    return GridFunction(g, extract(P, g, spec, bs.mean), bounded_tail());
}

Barrier build_upper_barrier(const GridFunction& phi, double s, const SpectralOptions& opt) {
    if (!(s > 1.0 && s < 2.0)) throw ValidationError("order s must lie strictly between 1 and 2");
    const Grid& g = phi.grid();
    const int d = g.dim;
    const ConeModel& cone = phi.cone();
    if (!cone.present()) throw ValidationError("barrier needs a cone-asymptotic input");
    const double A = 1.0 / frac_laplacian_constant(d, s);

    // Bounded part of phi on the box, transformed on the padded box.
    std::vector<double> bounded(phi.size());
    for (std::size_t k = 0; k < phi.size(); ++k) bounded[k] = phi[k] - cone.smooth(g.coord(k), 1.0);
    const int band = band_nodes(g, opt.band);
    BandSplit bs = band_stats(g, bounded, band);
    if (bs.residual > opt.band_tol * phi.scale()) band_error(bs.residual, opt.band_tol * phi.scale());
    PaddedBox P(g);
    auto lap_b = P.plan->apply(embed(P, g, bounded, bs.mean, band), [s](double xi) { return std::pow(xi, s); });

    // g = L phi = -A (-Delta)^{s/2} phi on the whole padded box; the cone part is known there.
    std::vector<double> rhs(P.size());
    for (std::size_t k = 0; k < P.size(); ++k) rhs[k] = -A * (lap_b[k] + cone_frac_laplacian(cone, P.coord(g, k), s));

    // Taper toward the band mean of the padded box and invert I + A(-Delta)^{s/2}.
    int pband = 0;
    {
        int nmin = P.N[0];
        for (int a = 1; a < d; ++a) nmin = std::min(nmin, P.N[a]);
        pband = std::max(2, int(std::lround(opt.band * nmin / 2.0)));
    }
    double sum = 0.0;
    std::size_t cnt = 0;
    for (std::size_t k = 0; k < P.size(); ++k) {
        Index j = P.multi(k);
        bool in_band = false;
        for (int a = 0; a < d; ++a) in_band |= std::min(j[a], P.N[a] - 1 - j[a]) < pband;
        if (in_band) {
            sum += rhs[k];
            ++cnt;
        }
    }
    const double m = cnt ? sum / cnt : 0.0;
    std::vector<double> tapered(P.size());
    for (std::size_t k = 0; k < P.size(); ++k) tapered[k] = (rhs[k] - m) * window(P.multi(k), P.N, d, pband);
    auto wpad = P.plan->apply(tapered, [s, A](double xi) { return 1.0 / (1.0 + A * std::pow(xi, s)); });
    std::vector<double> wv = extract(P, g, wpad, m);

    Barrier out;
    // Decay fit of log w against log(1 + |x|) over L/2 <= |x| <= L.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = 0;
    bool positive = true;
    for (std::size_t k = 0; k < wv.size(); ++k) {
        double r = norm(g.coord(k));
        if (r < 0.5 * g.L || r > g.L) continue;
        if (!(wv[k] > 0.0)) {
            positive = false;
            continue;
        }
        double lx = std::log(1.0 + r), ly = std::log(wv[k]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    double wmax = 0.0;
    for (double v : wv) wmax = std::max(wmax, std::abs(v));
    // Strictly convex cones produce the |x|^{1-s} tail; degenerate ones are reported only.
    double sym = kInf;
    {
        for (const auto& th : cone_directions(d).dirs) sym = std::min(sym, cone.phi(th) + cone.phi(scaled(th, -1.0)));
    }
    const bool strict = sym > 1e-6;
    if (n >= 2 && positive) {
        double den = n * sxx - sx * sx;
        out.exponent = (n * sxy - sx * sy) / den;
        out.C = std::exp((sy - out.exponent * sx) / n);
    } else {
        out.exponent = 0.0;
        out.C = wmax;
    }
    if (strict && (!positive || n < 2 || std::abs(out.exponent - (1.0 - s)) > opt.decay_tol)) {
        std::ostringstream os;
        os << "barrier decay exponent " << out.exponent << " deviates from " << 1.0 - s
           << " by more than " << opt.decay_tol << " (box too small or cone tail inconsistent)";
        throw ValidationError(os.str());
    }
    Tail t;
    t.growth = 0;
    t.cone = ConeModel::polyhedral(d, {Vec{0, 0, 0}});
    t.o_max = wmax;
    const double C = out.C, e = out.exponent;
    if (strict) t.exact = [C, e](const Vec& y) { return C * std::pow(1.0 + norm(y), e); };
    out.w = GridFunction(g, std::move(wv), std::move(t));
    return out;
}

}  // namespace nlma
