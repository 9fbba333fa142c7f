#include "nlma/grid_function.hpp"

#include <algorithm>
#include <mutex>

#include "nlma/hull.hpp"

namespace nlma {

Grid Grid::make(int d, int nodes_per_axis, double L) {
    Grid g;
    g.dim = d;
    g.L = L;
    g.n = {1, 1, 1};
    for (int i = 0; i < d; ++i) g.n[i] = nodes_per_axis;
    g.h = nodes_per_axis > 1 ? 2.0 * L / (nodes_per_axis - 1) : 1.0;
    g.validate();
    return g;
}

Grid Grid::with_spacing(int d, double L, double h) {
    if (!(h > 0.0)) throw ValidationError("grid spacing h must be positive");
    if (!(L > 0.0)) throw ValidationError("box half-width L must be positive");
    double cells = 2.0 * L / h;
    long k = std::lround(cells);
    if (std::abs(cells - double(k)) > 1e-6 * std::max(1.0, cells))
        throw ValidationError("2L/h must be an integer");
    return make(d, int(k) + 1, L);
}

Index Grid::multi(std::size_t k) const {
    Index i{0, 0, 0};
    i[2] = int(k % n[2]);
    k /= n[2];
    i[1] = int(k % n[1]);
    i[0] = int(k / n[1]);
    return i;
}

Vec Grid::coord(const Index& i) const {
    Vec y{0, 0, 0};
    for (int a = 0; a < dim; ++a) y[a] = -L + i[a] * h;
    return y;
}

bool Grid::inside(const Vec& y, double slack) const {
    for (int a = 0; a < dim; ++a)
        if (y[a] < -L - slack || y[a] > L + slack) return false;
    return true;
}

std::size_t Grid::nearest(const Vec& y) const {
    if (!inside(y, 1e-9 * h)) throw ValidationError("point lies outside the grid box");
    Index i{0, 0, 0};
    for (int a = 0; a < dim; ++a) i[a] = std::clamp(int(std::lround((y[a] + L) / h)), 0, n[a] - 1);
    return index(i);
}

int Grid::depth(std::size_t k) const {
    Index i = multi(k);
    int best = 1 << 30;
    for (int a = 0; a < dim; ++a) best = std::min({best, i[a], n[a] - 1 - i[a]});
    return best;
}

std::size_t Grid::stride(int axis) const {
    if (axis == 0) return std::size_t(n[1]) * n[2];
    if (axis == 1) return std::size_t(n[2]);
    return 1;
}

bool Grid::same_as(const Grid& o) const {
    return dim == o.dim && n == o.n && std::abs(L - o.L) <= 1e-12 * L && std::abs(h - o.h) <= 1e-12 * h;
}

void Grid::validate() const {
    if (dim < 1 || dim > 3) throw ValidationError("dimension must be 1, 2 or 3");
    if (!(h > 0.0)) throw ValidationError("grid spacing h must be positive");
    if (!(L > 0.0)) throw ValidationError("box half-width L must be positive");
    for (int a = 0; a < dim; ++a) {
        if (n[a] < 3) throw ValidationError("need at least 3 nodes per axis");
        if (std::abs((n[a] - 1) * h - 2.0 * L) > 1e-9 * L) throw ValidationError("grid size inconsistent with L and h");
    }
    for (int a = dim; a < 3; ++a)
        if (n[a] != 1) throw ValidationError("unused axes must have one node");
}

std::vector<Index> stencil_directions(int d, bool with_diagonals) {
    std::vector<Index> out;
    for (int a = 0; a < d; ++a) {
        Index e{0, 0, 0};
        e[a] = 1;
        out.push_back(e);
    }
    if (!with_diagonals || d == 1) return out;
    // All sign patterns with the first nonzero entry positive and at least two nonzeros.
    int total = 1;
    for (int a = 0; a < d; ++a) total *= 3;
    for (int code = 0; code < total; ++code) {
        Index e{0, 0, 0};
        int c = code, nz = 0, first = 0;
        for (int a = 0; a < d; ++a) {
            e[a] = c % 3 - 1;
            c /= 3;
            if (e[a] != 0) {
                if (nz == 0) first = e[a];
                ++nz;
            }
        }
        if (nz >= 2 && first > 0) out.push_back(e);
    }
    return out;
}

struct GridFunction::HullCache {
    std::once_flag once;
    std::unique_ptr<LowerHull> hull;
};

GridFunction::GridFunction(Grid g, std::vector<double> values, Tail tail)
    : grid_(g), values_(std::move(values)), tail_(std::move(tail)), cache_(std::make_shared<HullCache>()) {
    grid_.validate();
    if (values_.size() != grid_.size()) throw ValidationError("value array does not match the grid");
    for (double v : values_)
        if (!std::isfinite(v)) throw ValidationError("grid values must be finite");
    classify();
}

void GridFunction::classify() {
    scale_ = 1.0;
    for (double v : values_) scale_ = std::max(scale_, std::abs(v));
    const auto dirs = stencil_directions(grid_.dim, true);
    midpoint_defect_ = -kInf;
    for (std::size_t k = 0; k < values_.size(); ++k) {
        Index i = grid_.multi(k);
        for (const auto& e : dirs) {
            bool ok = true;
            for (int a = 0; a < grid_.dim; ++a)
                if (i[a] - std::abs(e[a]) < 0 || i[a] + std::abs(e[a]) >= grid_.n[a]) ok = false;
            if (!ok) continue;
            Index p = i, m = i;
            for (int a = 0; a < grid_.dim; ++a) {
                p[a] += e[a];
                m[a] -= e[a];
            }
            double defect = 2.0 * values_[k] - values_[grid_.index(p)] - values_[grid_.index(m)];
            midpoint_defect_ = std::max(midpoint_defect_, defect);
        }
    }
    convex_ = midpoint_defect_ <= 1e-12 * scale_;
    boundary_offset_ = 0.0;
    if (tail_.cone.present()) {
        for (std::size_t k = 0; k < values_.size(); ++k)
            if (grid_.depth(k) <= 1)
                boundary_offset_ = std::max(boundary_offset_, std::abs(values_[k] - tail_.cone.phi(grid_.coord(k))));
        cone_tagged_ = boundary_offset_ <= tail_.o_max * (1.0 + 1e-12) + 1e-12 * scale_;
    } else {
        cone_tagged_ = false;
    }
}

namespace {

inline void keys_weights(double t, double w[4]) {
    double t2 = t * t, t3 = t2 * t;
    w[0] = 0.5 * (-t3 + 2.0 * t2 - t);
    w[1] = 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0);
    w[2] = 0.5 * (-3.0 * t3 + 4.0 * t2 + t);
    w[3] = 0.5 * (t3 - t2);
}

// Value at a possibly out-of-range index, with cubic-exact ghost extrapolation
// v[-1] = 3v[0] - 3v[1] + v[2].
double ghost_value(const Grid& g, const std::vector<double>& v, Index i) {
    for (int a = 0; a < g.dim; ++a) {
        if (i[a] < 0) {
            Index i0 = i, i1 = i, i2 = i;
            i0[a] = 0;
            i1[a] = 1;
            i2[a] = 2;
            return 3.0 * ghost_value(g, v, i0) - 3.0 * ghost_value(g, v, i1) + ghost_value(g, v, i2);
        }
        if (i[a] >= g.n[a]) {
            int n = g.n[a];
            Index i0 = i, i1 = i, i2 = i;
            i0[a] = n - 1;
            i1[a] = n - 2;
            i2[a] = n - 3;
            return 3.0 * ghost_value(g, v, i0) - 3.0 * ghost_value(g, v, i1) + ghost_value(g, v, i2);
        }
    }
    return v[g.index(i)];
}

}  // namespace

double GridFunction::interpolate(const Vec& y) const {
    const Grid& g = grid_;
    int base[3] = {0, 0, 0};
    double w[3][4] = {{0, 1, 0, 0}, {0, 1, 0, 0}, {0, 1, 0, 0}};
    bool interior = true;
    for (int a = 0; a < g.dim; ++a) {
        double u = (y[a] + g.L) / g.h;
        int i0 = std::clamp(int(std::floor(u)), 0, g.n[a] - 2);
        double t = u - i0;
        keys_weights(t, w[a]);
        base[a] = i0 - 1;
        if (i0 - 1 < 0 || i0 + 2 >= g.n[a]) interior = false;
    }
    const double* v = values_.data();
    if (g.dim == 1) {
        if (interior) return w[0][0] * v[base[0]] + w[0][1] * v[base[0] + 1] + w[0][2] * v[base[0] + 2] + w[0][3] * v[base[0] + 3];
        double s = 0.0;
        for (int p = 0; p < 4; ++p) s += w[0][p] * ghost_value(g, values_, {base[0] + p, 0, 0});
        return s;
    }
    if (g.dim == 2) {
        double s = 0.0;
        if (interior) {
            const std::size_t ny = std::size_t(g.n[1]);
            for (int p = 0; p < 4; ++p) {
                const double* row = v + (std::size_t(base[0] + p) * ny + base[1]);
                double r = w[1][0] * row[0] + w[1][1] * row[1] + w[1][2] * row[2] + w[1][3] * row[3];
                s += w[0][p] * r;
            }
            return s;
        }
        for (int p = 0; p < 4; ++p)
            for (int q = 0; q < 4; ++q) s += w[0][p] * w[1][q] * ghost_value(g, values_, {base[0] + p, base[1] + q, 0});
        return s;
    }
    double s = 0.0;
    for (int p = 0; p < 4; ++p)
        for (int q = 0; q < 4; ++q)
            for (int r = 0; r < 4; ++r) {
                Index i{base[0] + p, base[1] + q, base[2] + r};
                double val = interior ? v[g.index(i)] : ghost_value(g, values_, i);
                s += w[0][p] * w[1][q] * w[2][r] * val;
            }
    return s;
}

double GridFunction::eval(const Vec& y) const {
    if (grid_.inside(y)) return interpolate(y);
    return exterior(y);
}

double GridFunction::exterior(const Vec& y) const {
    if (tail_.exact) return tail_.exact(y);
    Vec p = y;
    for (int a = 0; a < grid_.dim; ++a) p[a] = std::clamp(y[a], -grid_.L, grid_.L);
    double base = interpolate(p);
    if (tail_.cone.present()) return tail_.cone.phi(y) + (base - tail_.cone.phi(p));
    // Linear continuation with one-sided slopes normal to the faces that y lies beyond.
    double v = base;
    for (int a = 0; a < grid_.dim; ++a) {
        double out = y[a] - p[a];
        if (out == 0.0) continue;
        Vec q = p;
        q[a] -= (out > 0 ? grid_.h : -grid_.h);
        double slope = (base - interpolate(q)) / grid_.h;
        v += std::abs(out) * slope;
    }
    return v;
}

Vec GridFunction::gradient(std::size_t k) const {
    Vec g{0, 0, 0};
    Index i = grid_.multi(k);
    for (int a = 0; a < grid_.dim; ++a) {
        std::size_t st = grid_.stride(a);
        if (i[a] > 0 && i[a] < grid_.n[a] - 1) {
            g[a] = (values_[k + st] - values_[k - st]) / (2.0 * grid_.h);
        } else if (i[a] == 0) {
            g[a] = (-3.0 * values_[k] + 4.0 * values_[k + st] - values_[k + 2 * st]) / (2.0 * grid_.h);
        } else {
            g[a] = (3.0 * values_[k] - 4.0 * values_[k - st] + values_[k - 2 * st]) / (2.0 * grid_.h);
        }
    }
    return g;
}

Mat GridFunction::hessian(std::size_t k) const {
    Mat H{};
    Index i = grid_.multi(k);
    double h2 = grid_.h * grid_.h;
    for (int a = 0; a < grid_.dim; ++a)
        if (i[a] == 0 || i[a] == grid_.n[a] - 1) return H;
    for (int a = 0; a < grid_.dim; ++a) {
        std::size_t sa = grid_.stride(a);
        H[a][a] = (values_[k + sa] - 2.0 * values_[k] + values_[k - sa]) / h2;
        for (int b = a + 1; b < grid_.dim; ++b) {
            std::size_t sb = grid_.stride(b);
            double v = (values_[k + sa + sb] - values_[k + sa - sb] - values_[k - sa + sb] + values_[k - sa - sb]) / (4.0 * h2);
            H[a][b] = H[b][a] = v;
        }
    }
    return H;
}

GridFunction GridFunction::with_values(std::vector<double> v) const { return GridFunction(grid_, std::move(v), tail_); }

GridFunction GridFunction::with_tail(Tail t) const { return GridFunction(grid_, values_, std::move(t)); }

const LowerHull& GridFunction::hull() const {
    std::call_once(cache_->once, [this] {
        double tol = 1e-12 * std::max(scale_, grid_.L);
        cache_->hull = std::make_unique<LowerHull>(grid_, values_, tol);
    });
    return *cache_->hull;
}

GridFunction sample(const Grid& g, const Evaluator& f, Tail tail) {
    std::vector<double> v(g.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = f(g.coord(k));
    tail.exact = f;
    return GridFunction(g, std::move(v), std::move(tail));
}

}  // namespace nlma
