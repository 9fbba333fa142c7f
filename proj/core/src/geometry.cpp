#include "nlma/geometry.hpp"

#include <algorithm>

#include "nlma/hull.hpp"
#include "nlma/rays.hpp"

namespace nlma {

namespace {

// Probe directions for widths and tail ghosts.
const DirectionSet& probe_directions(int d) {
    static const DirectionSet sets[3] = {make_directions(1, 2), make_directions(2, 64), make_directions(3, 24)};
    return sets[d - 1];
}

// Smallest width of the convex hull of pts, over the probe directions.
double min_width(const std::vector<Vec>& pts, int d) {
    if (pts.size() < 2) return 0.0;
    const auto& dirs = probe_directions(d);
    double best = kInf;
    for (const auto& th : dirs.dirs) {
        double lo = kInf, hi = -kInf;
        for (const auto& p : pts) {
            double v = dot(p, th);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        best = std::min(best, hi - lo);
    }
    return best;
}

double max_pairwise(const std::vector<Vec>& pts) {
    double best = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j) best = std::max(best, norm(sub(pts[i], pts[j])));
    return best;
}

constexpr double kGhostRadii[] = {2, 4, 8, 16, 32, 64};

}  // namespace

double SubdifferentialSet::diameter() const { return max_pairwise(vertices); }

GridFunction convex_envelope(const GridFunction& f) {
    const LowerHull& h = f.hull();
    return f.with_values(h.envelope());
}

bool is_kink(const GridFunction& f, std::size_t node) {
    const Grid& g = f.grid();
    const LowerHull& h = f.hull();
    if (h.affine() || !h.on_hull(node)) return false;
    double w = min_width(h.slopes(node), g.dim);
    if (w <= 1e-6) return false;
    Index i = g.multi(node);
    double nb = 0.0;
    for (int a = 0; a < g.dim; ++a)
        for (int s : {-1, 1}) {
            Index j = i;
            j[a] += s;
            if (j[a] < 0 || j[a] >= g.n[a]) continue;
            std::size_t k = g.index(j);
            nb = std::max(nb, min_width(h.slopes(k), g.dim));
        }
    return w > 4.0 * nb;
}

SubdifferentialSet hull_subdifferential(const GridFunction& f, std::size_t node) {
    const Grid& g = f.grid();
    const LowerHull& h = f.hull();
    SubdifferentialSet out;
    out.node = node;
    out.x = g.coord(node);
    if (!h.on_hull(node)) return out;
    out.boundary_contact = h.boundary_contact(node);
    if (!is_kink(f, node)) {
        out.singleton = true;
        out.vertices = {f.gradient(node)};
        return out;
    }
    std::vector<Vec> v = h.slopes(node);
    // Slopes whose contact extends past the box must also support the cone at infinity.
    if (out.boundary_contact && f.cone().present()) {
        std::vector<Vec> kept;
        for (const auto& b : v)
            if (f.cone().min_margin(b) >= -1e-9 * std::max(1.0, norm(b))) kept.push_back(b);
        v = std::move(kept);
    }
    out.vertices = std::move(v);
    out.singleton = out.vertices.size() == 1;
    out.full_dimensional = !out.singleton && min_width(out.vertices, g.dim) > 1e-6;
    return out;
}

SubdifferentialSet subdifferential_at(const GridFunction& f, std::size_t node) {
    if (!f.convex()) throw ValidationError("subdifferential undefined for non-convex data; use supporting_plane_check");
    if (node >= f.size()) throw ValidationError("node index outside the grid");
    return hull_subdifferential(f, node);
}

IncrementMin min_increment(const GridFunction& f, std::size_t node, const Vec& b) {
    const Grid& g = f.grid();
    const Vec x = g.coord(node);
    const double fx = f[node];
    IncrementMin out{kInf, x};
    for (std::size_t k = 0; k < f.size(); ++k) {
        Vec y = g.coord(k);
        double inc = f[k] - fx - dot(b, sub(y, x));
        if (inc < out.value) out = {inc, y};
    }
    for (const auto& th : probe_directions(g.dim).dirs)
        for (double r : kGhostRadii) {
            Vec y = axpy(x, r * g.L, th);
            double inc = f.exterior(y) - fx - r * g.L * dot(b, th);
            if (inc < out.value) out = {inc, y};
        }
    return out;
}

PlaneCheck supporting_plane_check(const GridFunction& f, std::size_t node) {
    if (node >= f.size()) throw ValidationError("node index outside the grid");
    const Grid& g = f.grid();
    const LowerHull& h = f.hull();
    const double tol = 1e-10 * f.scale();
    PlaneCheck pc;
    pc.gradient = f.gradient(node);
    if (h.on_hull(node)) {
        std::vector<Vec> cands = h.slopes(node);
        cands.insert(cands.begin(), pc.gradient);
        const Vec x = g.coord(node);
        for (const auto& b : cands) {
            bool ok = true;
            for (const auto& th : probe_directions(g.dim).dirs) {
                for (double r : kGhostRadii) {
                    double inc = f.exterior(axpy(x, r * g.L, th)) - f[node] - r * g.L * dot(b, th);
                    if (inc < -tol * r) {
                        ok = false;
                        break;
                    }
                }
                if (!ok) break;
            }
            if (ok) {
                pc.supported = true;
                return pc;
            }
        }
    }
    IncrementMin m = min_increment(f, node, pc.gradient);
    pc.witness = sub(m.at, g.coord(node));
    pc.defect = m.value;
    return pc;
}

double section_diameter(const GridFunction& f, std::size_t node, const Vec& b, double t) {
    const Grid& g = f.grid();
    if (node >= f.size()) throw ValidationError("node index outside the grid");
    if (!(t >= 0.0)) throw ValidationError("section level must be nonnegative");
    const double tol = 1e-8 * f.scale();
    if (min_increment(f, node, b).value < -tol) throw ValidationError("b is not a subgradient at x");
    if (f.cone().present() && !f.cone().interior_slope(b)) return kInf;
    const Vec x = g.coord(node);
    const double fx = f[node];
    auto inc = [&](const Vec& y) { return f.eval(y) - fx - dot(b, sub(y, x)); };

    if (t == 0.0) {
        // Contact set on the grid.
        std::vector<Vec> pts;
        for (std::size_t k = 0; k < f.size(); ++k) {
            if (f[k] - fx - dot(b, sub(g.coord(k), x)) <= 1e-10 * f.scale()) {
                if (g.depth(k) == 0 && k != node) return kInf;
                pts.push_back(g.coord(k));
            }
        }
        return max_pairwise(pts);
    }

    std::vector<Vec> pts;
    for (const auto& th : probe_directions(g.dim).dirs) {
        // Distance to the box along th.
        double rmax = kInf;
        for (int a = 0; a < g.dim; ++a) {
            if (th[a] > 1e-14) rmax = std::min(rmax, (g.L - x[a]) / th[a]);
            if (th[a] < -1e-14) rmax = std::min(rmax, (-g.L - x[a]) / th[a]);
        }
        double lo = 0.0, hi = -1.0;
        double r = 0.0;
        while (r < rmax) {
            double rn = std::min(rmax, r + g.h);
            if (inc(axpy(x, rn, th)) > t) {
                lo = r;
                hi = rn;
                break;
            }
            r = rn;
        }
        double rho;
        if (hi < 0.0) {
            double at_box = inc(axpy(x, rmax, th));
            if (!(at_box > 0.0)) return kInf;
            rho = rmax * t / at_box;
            rho = std::max(rho, rmax);
        } else {
            for (int it = 0; it < 60; ++it) {
                double mid = 0.5 * (lo + hi);
                (inc(axpy(x, mid, th)) > t ? hi : lo) = mid;
            }
            rho = 0.5 * (lo + hi);
        }
        pts.push_back(axpy(x, rho, th));
    }
    return max_pairwise(pts);
}

}  // namespace nlma
