#include "nlma/hull.hpp"

#include <algorithm>
#include <cstdint>
#include <unordered_map>

#include <Eigen/Dense>

namespace nlma {

namespace {

template <int D>
using Pt = std::array<double, D>;

template <int D>
double dotp(const Pt<D>& a, const Pt<D>& b) {
    double s = 0.0;
    for (int i = 0; i < D; ++i) s += a[i] * b[i];
    return s;
}

// Quickhull in dimension D (3 or 4). Facets are simplices; nb[i] is the facet across
// the ridge that omits vertex i. Orientation is fixed by a strictly interior point.
template <int D>
class QuickHull {
public:
    struct Facet {
        std::array<int, D> v{};
        std::array<int, D> nb{};
        Pt<D> n{};
        double off = 0.0;
        std::vector<int> outside;
        int far = -1;
        double fard = 0.0;
        bool alive = true;
        int visit = 0;
        bool visible = false;
    };

    QuickHull(const std::vector<Pt<D>>& pts, double eps) : pts_(pts), eps_(eps) {}

    bool run() {
        std::array<int, D + 1> simplex{};
        if (!initial_simplex(simplex)) return false;
        for (int i = 0; i < D; ++i) interior_[i] = 0.0;
        for (int j = 0; j <= D; ++j)
            for (int i = 0; i < D; ++i) interior_[i] += pts_[simplex[j]][i] / (D + 1);
        std::vector<int> ids;
        for (int j = 0; j <= D; ++j) {
            Facet f;
            int c = 0;
            for (int k = 0; k <= D; ++k)
                if (k != j) f.v[c++] = simplex[k];
            if (!make_plane(f)) return false;
            ids.push_back(int(facets_.size()));
            facets_.push_back(std::move(f));
        }
        link(ids, -1);
        std::vector<char> used(pts_.size(), 0);
        for (int j = 0; j <= D; ++j) used[simplex[j]] = 1;
        for (int p = 0; p < int(pts_.size()); ++p)
            if (!used[p]) assign(p, ids);
        std::vector<int> stack;
        for (int id : ids)
            if (!facets_[id].outside.empty()) stack.push_back(id);
        int stamp = 0;
        while (!stack.empty()) {
            int fid = stack.back();
            stack.pop_back();
            if (!facets_[fid].alive || facets_[fid].outside.empty()) continue;
            int p = facets_[fid].far;
            ++stamp;
            std::vector<int> visible{fid};
            facets_[fid].visit = stamp;
            facets_[fid].visible = true;
            for (std::size_t q = 0; q < visible.size(); ++q) {
                Facet& vf = facets_[visible[q]];
                for (int i = 0; i < D; ++i) {
                    int nid = vf.nb[i];
                    Facet& nf = facets_[nid];
                    if (nf.visit == stamp) continue;
                    nf.visit = stamp;
                    nf.visible = dist(nf, p) > eps_;
                    if (nf.visible) visible.push_back(nid);
                }
            }
            std::vector<int> fresh;
            for (int vid : visible) {
                for (int i = 0; i < D; ++i) {
                    int nid = facets_[vid].nb[i];
                    if (facets_[nid].visit == stamp && facets_[nid].visible) continue;
                    Facet nf;
                    int c = 0;
                    for (int k = 0; k < D; ++k)
                        if (k != i) nf.v[c++] = facets_[vid].v[k];
                    nf.v[D - 1] = p;
                    if (!make_plane(nf)) return false;
                    nf.nb[D - 1] = nid;
                    int newid = int(facets_.size());
                    Facet& other = facets_[nid];
                    for (int k = 0; k < D; ++k)
                        if (other.nb[k] == vid) other.nb[k] = newid;
                    fresh.push_back(newid);
                    facets_.push_back(std::move(nf));
                }
            }
            link(fresh, D - 1);
            std::vector<int> orphans;
            for (int vid : visible) {
                Facet& vf = facets_[vid];
                vf.alive = false;
                vf.visible = false;
                for (int q : vf.outside)
                    if (q != p) orphans.push_back(q);
                vf.outside.clear();
                vf.outside.shrink_to_fit();
            }
            for (int q : orphans) assign(q, fresh);
            for (int id : fresh)
                if (!facets_[id].outside.empty()) stack.push_back(id);
        }
        return true;
    }

    const std::vector<Facet>& facets() const { return facets_; }

private:
    double dist(const Facet& f, int p) const { return dotp<D>(f.n, pts_[p]) - f.off; }

    void assign(int p, const std::vector<int>& ids) {
        for (int id : ids) {
            Facet& f = facets_[id];
            double d = dist(f, p);
            if (d > eps_) {
                f.outside.push_back(p);
                if (d > f.fard) {
                    f.fard = d;
                    f.far = p;
                }
                return;
            }
        }
    }

    bool make_plane(Facet& f) const {
        Eigen::Matrix<double, D - 1, D> r;
        for (int i = 1; i < D; ++i)
            for (int k = 0; k < D; ++k) r(i - 1, k) = pts_[f.v[i]][k] - pts_[f.v[0]][k];
        Pt<D> n{};
        for (int k = 0; k < D; ++k) {
            Eigen::Matrix<double, D - 1, D - 1> m;
            for (int i = 0; i < D - 1; ++i) {
                int c = 0;
                for (int j = 0; j < D; ++j)
                    if (j != k) m(i, c++) = r(i, j);
            }
            n[k] = ((k % 2) ? -1.0 : 1.0) * m.determinant();
        }
        double len = std::sqrt(dotp<D>(n, n));
        if (!(len > 0.0)) return false;
        for (int k = 0; k < D; ++k) n[k] /= len;
        double off = dotp<D>(n, pts_[f.v[0]]);
        if (dotp<D>(n, interior_) - off > 0.0) {
            for (int k = 0; k < D; ++k) n[k] = -n[k];
            off = -off;
        }
        f.n = n;
        f.off = off;
        return true;
    }

    static std::uint64_t ridge_key(std::array<int, D> v, int skip) {
        std::array<int, D - 1> r{};
        int c = 0;
        for (int k = 0; k < D; ++k)
            if (k != skip) r[c++] = v[k];
        std::sort(r.begin(), r.end());
        std::uint64_t key = 0;
        for (int k = 0; k < D - 1; ++k) key = key * (std::uint64_t(1) << 21) + std::uint64_t(r[k]);
        return key;
    }

    // Pairs the ridges of the given facets among themselves; `fixed` is a local vertex
    // slot whose ridge is already linked (or -1).
    void link(const std::vector<int>& ids, int fixed) {
        std::unordered_map<std::uint64_t, std::pair<int, int>> open;
        open.reserve(ids.size() * D);
        for (int id : ids) {
            for (int i = 0; i < D; ++i) {
                if (i == fixed) continue;
                std::uint64_t key = ridge_key(facets_[id].v, i);
                auto it = open.find(key);
                if (it == open.end()) {
                    open.emplace(key, std::make_pair(id, i));
                } else {
                    facets_[id].nb[i] = it->second.first;
                    facets_[it->second.first].nb[it->second.second] = id;
                    open.erase(it);
                }
            }
        }
    }

    bool initial_simplex(std::array<int, D + 1>& s) const {
        int n = int(pts_.size());
        int lo = 0, hi = 0;
        for (int p = 1; p < n; ++p) {
            if (pts_[p][0] < pts_[lo][0]) lo = p;
            if (pts_[p][0] > pts_[hi][0]) hi = p;
        }
        if (lo == hi) return false;
        s[0] = lo;
        s[1] = hi;
        std::vector<Pt<D>> basis;
        auto push_dir = [&](int p) {
            Pt<D> e{};
            for (int k = 0; k < D; ++k) e[k] = pts_[p][k] - pts_[s[0]][k];
            for (const auto& b : basis) {
                double c = dotp<D>(e, b);
                for (int k = 0; k < D; ++k) e[k] -= c * b[k];
            }
            double len = std::sqrt(dotp<D>(e, e));
            for (int k = 0; k < D; ++k) e[k] /= len;
            basis.push_back(e);
        };
        push_dir(hi);
        for (int j = 2; j <= D; ++j) {
            double best = -1.0;
            int arg = -1;
            for (int p = 0; p < n; ++p) {
                Pt<D> e{};
                for (int k = 0; k < D; ++k) e[k] = pts_[p][k] - pts_[s[0]][k];
                for (const auto& b : basis) {
                    double c = dotp<D>(e, b);
                    for (int k = 0; k < D; ++k) e[k] -= c * b[k];
                }
                double d = dotp<D>(e, e);
                if (d > best) {
                    best = d;
                    arg = p;
                }
            }
            if (arg < 0 || std::sqrt(best) <= 4.0 * eps_) return false;
            s[j] = arg;
            push_dir(arg);
        }
        return true;
    }

    const std::vector<Pt<D>>& pts_;
    double eps_;
    Pt<D> interior_{};
    std::vector<Facet> facets_;
};

// Least-squares affine fit; returns the max abs residual.
double affine_fit(const Grid& g, const std::vector<double>& v, Vec& slope, double& c0) {
    int d = g.dim;
    Eigen::MatrixXd A(v.size(), d + 1);
    Eigen::VectorXd z(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) {
        Vec y = g.coord(k);
        for (int a = 0; a < d; ++a) A(k, a) = y[a];
        A(k, d) = 1.0;
        z(k) = v[k];
    }
    Eigen::VectorXd sol = A.colPivHouseholderQr().solve(z);
    slope = {0, 0, 0};
    for (int a = 0; a < d; ++a) slope[a] = sol(a);
    c0 = sol(d);
    return (A * sol - z).cwiseAbs().maxCoeff();
}

}  // namespace

LowerHull::LowerHull(const Grid& g, const std::vector<double>& values, double tol) : tol_(tol) {
    envelope_ = values;
    gap_.assign(values.size(), 0.0);
    Vec slope;
    double c0;
    if (affine_fit(g, values, slope, c0) <= tol) {
        build_affine(g, values, slope);
        return;
    }
    if (g.dim == 1)
        build_chain(g, values);
    else
        build_quickhull(g, values);
}

void LowerHull::build_affine(const Grid& g, const std::vector<double>& v, const Vec& slope) {
    affine_ = true;
    facet_grad_ = {slope};
    facet_boundary_ = {1};
    touch_start_.resize(v.size() + 1);
    touch_.assign(v.size(), 0);
    for (std::size_t k = 0; k <= v.size(); ++k) touch_start_[k] = k;
    (void)g;
}

void LowerHull::build_chain(const Grid& g, const std::vector<double>& v) {
    int n = int(v.size());
    std::vector<int> h;
    for (int i = 0; i < n; ++i) {
        while (h.size() >= 2) {
            int a = h[h.size() - 2], b = h.back();
            // b is dropped unless strictly below the chord from a to i.
            double t = double(b - a) / double(i - a);
            double chord = v[a] + t * (v[i] - v[a]);
            if (v[b] - chord >= -tol_)
                h.pop_back();
            else
                break;
        }
        h.push_back(i);
    }
    int segs = int(h.size()) - 1;
    facet_grad_.resize(segs);
    facet_boundary_.assign(segs, 0);
    for (int s = 0; s < segs; ++s) {
        facet_grad_[s] = {(v[h[s + 1]] - v[h[s]]) / ((h[s + 1] - h[s]) * g.h), 0, 0};
        facet_boundary_[s] = (h[s] == 0 || h[s + 1] == n - 1) ? 1 : 0;
    }
    std::vector<int> seg_of(n, segs - 1);
    std::vector<char> vertex(n, 0);
    for (int q = 0; q < segs; ++q)
        for (int i = h[q]; i < h[q + 1]; ++i) seg_of[i] = q;
    for (int i : h) vertex[i] = 1;
    touch_start_.assign(n + 1, 0);
    touch_.clear();
    for (int i = 0; i < n; ++i) {
        int q = seg_of[i];
        int a = h[q], b = h[q + 1];
        double env = v[i];
        if (!vertex[i]) {
            double t = double(i - a) / double(b - a);
            env = std::min(v[i], v[a] + t * (v[b] - v[a]));
        }
        gap_[i] = v[i] - env;
        envelope_[i] = gap_[i] <= tol_ ? v[i] : env;
        touch_start_[i] = touch_.size();
        if (gap_[i] > tol_) continue;
        if (vertex[i]) {
            if (i == b) {
                touch_.push_back(q);
            } else {
                if (q > 0) touch_.push_back(q - 1);
                touch_.push_back(q);
            }
        } else {
            touch_.push_back(q);
        }
    }
    touch_start_[n] = touch_.size();
}

void LowerHull::build_quickhull(const Grid& g, const std::vector<double>& v) {
    const int d = g.dim;
    double zmean = 0.0;
    for (double x : v) zmean += x;
    zmean /= double(v.size());
    std::vector<std::vector<std::pair<int, double>>> cover(v.size());
    std::vector<std::array<int, 4>> verts;
    auto run = [&](auto tag) {
        constexpr int D = decltype(tag)::value;
        std::vector<Pt<D>> pts(v.size());
        for (std::size_t k = 0; k < v.size(); ++k) {
            Vec y = g.coord(k);
            for (int a = 0; a < D - 1; ++a) pts[k][a] = y[a];
            pts[k][D - 1] = v[k] - zmean;
        }
        QuickHull<D> qh(pts, tol_);
        if (!qh.run()) throw std::runtime_error("convex hull construction failed");
        for (const auto& f : qh.facets()) {
            if (!f.alive || !(f.n[D - 1] < -1e-12)) continue;
            int fid = int(facet_grad_.size());
            Vec grad{0, 0, 0};
            for (int a = 0; a < D - 1; ++a) grad[a] = -f.n[a] / f.n[D - 1];
            facet_grad_.push_back(grad);
            char bnd = 0;
            for (int i = 0; i < D; ++i)
                if (g.depth(std::size_t(f.v[i])) == 0) bnd = 1;
            facet_boundary_.push_back(bnd);
            // Barycentric rasterization of the projected simplex over the grid nodes.
            Eigen::Matrix<double, D - 1, D - 1> T;
            Vec q0 = g.coord(std::size_t(f.v[0]));
            for (int i = 1; i < D; ++i) {
                Vec qi = g.coord(std::size_t(f.v[i]));
                for (int a = 0; a < D - 1; ++a) T(a, i - 1) = qi[a] - q0[a];
            }
            Eigen::Matrix<double, D - 1, D - 1> Ti = T.inverse();
            Index lo{0, 0, 0}, hi{0, 0, 0};
            for (int a = 0; a < D - 1; ++a) {
                int mn = 1 << 30, mx = -1;
                for (int i = 0; i < D; ++i) {
                    int c = g.multi(std::size_t(f.v[i]))[a];
                    mn = std::min(mn, c);
                    mx = std::max(mx, c);
                }
                lo[a] = mn;
                hi[a] = mx;
            }
            Index i = lo;
            while (true) {
                Vec y = g.coord(i);
                Eigen::Matrix<double, D - 1, 1> r, lam;
                for (int a = 0; a < D - 1; ++a) r(a) = y[a] - q0[a];
                lam = Ti * r;
                double l0 = 1.0;
                bool in = true;
                for (int a = 0; a < D - 1; ++a) {
                    l0 -= lam(a);
                    if (lam(a) < -1e-9) in = false;
                }
                if (l0 < -1e-9) in = false;
                if (in) {
                    double z = l0 * v[std::size_t(f.v[0])];
                    for (int a = 0; a < D - 1; ++a) z += lam(a) * v[std::size_t(f.v[a + 1])];
                    cover[g.index(i)].push_back({fid, z});
                }
                int a = D - 2;
                while (a >= 0) {
                    if (++i[a] <= hi[a]) break;
                    i[a] = lo[a];
                    --a;
                }
                if (a < 0) break;
            }
        }
    };
    if (d == 2)
        run(std::integral_constant<int, 3>{});
    else
        run(std::integral_constant<int, 4>{});
    touch_start_.assign(v.size() + 1, 0);
    touch_.clear();
    for (std::size_t k = 0; k < v.size(); ++k) {
        touch_start_[k] = touch_.size();
        if (cover[k].empty()) {
            gap_[k] = 0.0;
            envelope_[k] = v[k];
            continue;
        }
        double env = -kInf;
        for (const auto& c : cover[k]) env = std::max(env, c.second);
        env = std::min(env, v[k]);
        gap_[k] = v[k] - env;
        envelope_[k] = gap_[k] <= tol_ ? v[k] : env;
        if (gap_[k] <= tol_)
            for (const auto& c : cover[k]) touch_.push_back(c.first);
    }
    touch_start_[v.size()] = touch_.size();
}

std::vector<Vec> LowerHull::slopes(std::size_t k, double dedup_tol) const {
    std::vector<Vec> out;
    for (std::size_t t = touch_start_[k]; t < touch_start_[k + 1]; ++t) {
        const Vec& s = facet_grad_[std::size_t(touch_[t])];
        bool dup = false;
        for (const auto& o : out) {
            double m = 0.0;
            for (int a = 0; a < 3; ++a) m = std::max(m, std::abs(o[a] - s[a]));
            if (m <= dedup_tol * std::max(1.0, norm(s))) dup = true;
        }
        if (!dup) out.push_back(s);
    }
    return out;
}

bool LowerHull::boundary_contact(std::size_t k) const {
    for (std::size_t t = touch_start_[k]; t < touch_start_[k + 1]; ++t)
        if (facet_boundary_[std::size_t(touch_[t])]) return true;
    return false;
}

}  // namespace nlma
