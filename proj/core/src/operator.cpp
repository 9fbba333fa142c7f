#include "nlma/operator.hpp"

#include <algorithm>
#include <sstream>

#include "nlma/extended.hpp"
#include "nlma/geometry.hpp"
#include "nlma/hull.hpp"

namespace nlma {

double OperatorParams::constant(int d, double s) {
    double ball = unit_ball_volume(d);
    return (double(d) / s) * std::pow(ball, 1.0 + s / d);
}

OperatorParams OperatorParams::make(int d, double s) {
    if (d < 1 || d > 3) throw ValidationError("dimension must be 1, 2 or 3");
    if (!(s > 1.0 && s < 2.0)) throw ValidationError("order s must lie strictly between 1 and 2");
    OperatorParams p;
    p.d = d;
    p.s = s;
    p.ball = unit_ball_volume(d);
    p.C_ma = constant(d, s);
    return p;
}

namespace {

KernelSpec checked(KernelSpec::Variant v, double param, const char* what) {
    if (!(param > 0.0) || !std::isfinite(param)) throw ValidationError(std::string(what) + " must be positive");
    return {v, param};
}

}  // namespace

KernelSpec KernelSpec::near_pinned(double eps) { return checked(Variant::NearPinned, eps, "nearpinned eps"); }
KernelSpec KernelSpec::capped(double n) { return checked(Variant::Capped, n, "capped n"); }
KernelSpec KernelSpec::localized(double R) { return checked(Variant::Localized, R, "localized R"); }

KernelSpec KernelSpec::parse(const std::string& text) {
    auto colon = text.find(':');
    std::string name = text.substr(0, colon);
    if (name == "full") {
        if (colon != std::string::npos) throw ValidationError("kernel 'full' takes no parameters");
        return full();
    }
    const char* key = name == "nearpinned" ? "eps" : name == "capped" ? "n" : name == "localized" ? "R" : nullptr;
    if (!key) throw ValidationError("unknown kernel '" + name + "'");
    if (colon == std::string::npos) throw ValidationError("kernel '" + name + "' needs " + key + "=value");
    std::string rest = text.substr(colon + 1);
    auto eq = rest.find('=');
    if (eq == std::string::npos || rest.substr(0, eq) != key)
        throw ValidationError("kernel '" + name + "': expected token " + key + "=value, got '" + rest + "'");
    double v = parse_extended(rest.substr(eq + 1));
    if (name == "nearpinned") return near_pinned(v);
    if (name == "capped") return capped(v);
    return localized(v);
}

std::string KernelSpec::text() const {
    switch (variant) {
        case Variant::Full: return "full";
        case Variant::NearPinned: return "nearpinned:eps=" + format_extended(param);
        case Variant::Capped: return "capped:n=" + format_extended(param);
        case Variant::Localized: return "localized:R=" + format_extended(param);
    }
    return "full";
}

namespace {

void require_growth(const GridFunction& f, const KernelSpec& k) {
    if (f.growth() >= 2 && k.variant != KernelSpec::Variant::Localized)
        throw ValidationError("input grows quadratically: the kernel integral diverges; use a localized kernel");
}

ProfileOptions profile_for(const EvalOptions& opt, const KernelSpec& k, bool kink) {
    ProfileOptions po = opt.profile;
    po.kink = kink;
    if (k.variant == KernelSpec::Variant::Localized) po.min_reach = std::max(po.min_reach, 2.0 * k.param);
    return po;
}

void require_subgradient(const GridFunction& f, std::size_t node, const Vec& b) {
    if (min_increment(f, node, b).value < -1e-8 * f.scale()) throw ValidationError("b is not a subgradient at x");
}

// Vertices plus barycentric refinements: pairwise midpoints and the centroid per level.
std::vector<Vec> sup_candidates(const std::vector<Vec>& verts, int refine) {
    std::vector<Vec> out = verts;
    std::vector<Vec> level = verts;
    for (int r = 0; r < refine && level.size() > 1; ++r) {
        std::vector<Vec> next = level;
        for (std::size_t i = 0; i < level.size(); ++i)
            for (std::size_t j = i + 1; j < level.size(); ++j) next.push_back(scaled(add(level[i], level[j]), 0.5));
        Vec c{0, 0, 0};
        for (const auto& v : level) c = add(c, v);
        next.push_back(scaled(c, 1.0 / level.size()));
        for (std::size_t i = level.size(); i < next.size(); ++i) out.push_back(next[i]);
        level = std::move(next);
    }
    return out;
}

}  // namespace

MAResult eval_ma_node(const GridFunction& f, std::size_t node, const OperatorParams& op, const KernelSpec& k,
                      std::optional<Vec> b, const EvalOptions& opt) {
    if (op.d != f.dim()) throw ValidationError("operator dimension does not match the function");
    if (node >= f.size()) throw ValidationError("node index outside the grid");
    require_growth(f, k);
    MAResult res;
    res.node = node;
    res.x = f.grid().coord(node);
    PlaneCheck pc = supporting_plane_check(f, node);
    if (!pc.supported) {
        res.value = -kInf;
        res.flags = kNonconvex;
        res.witness = pc.witness;
        res.b = pc.gradient;
        return res;
    }
    if (b) {
        require_subgradient(f, node, *b);
        SectionProfile p = SectionProfile::build(f, node, *b, profile_for(opt, k, is_kink(f, node)));
        res.b = *b;
        res.flags = p.flags();
        res.value = p.integrate(op, k);
        return res;
    }
    SubdifferentialSet sd = hull_subdifferential(f, node);
    if (sd.empty()) sd.vertices = {pc.gradient};
    if (sd.singleton) {
        SectionProfile p = SectionProfile::build(f, node, sd.vertices[0], profile_for(opt, k, false));
        res.b = sd.vertices[0];
        res.flags = p.flags();
        res.value = p.integrate(op, k);
        return res;
    }
    if (sd.full_dimensional && k.variant != KernelSpec::Variant::Capped) {
        Vec c{0, 0, 0};
        for (const auto& v : sd.vertices) c = add(c, v);
        res.b = scaled(c, 1.0 / sd.vertices.size());
        res.value = kInf;
        return res;
    }
    res.value = -kInf;
    for (const auto& cand : sup_candidates(sd.vertices, opt.refine)) {
        SectionProfile p = SectionProfile::build(f, node, cand, profile_for(opt, k, true));
        double v = p.integrate(op, k);
        if (v > res.value) {
            res.value = v;
            res.b = cand;
            res.flags = p.flags();
        }
    }
    return res;
}

MAResult eval_ma(const GridFunction& f, const Vec& x, const OperatorParams& op, const KernelSpec& k,
                 std::optional<Vec> b, const EvalOptions& opt) {
    return eval_ma_node(f, f.grid().nearest(x), op, k, b, opt);
}

SectionProfile section_profile(const GridFunction& f, const Vec& x, std::optional<Vec> b, const ProfileOptions& opt) {
    if (!f.convex()) throw ValidationError("section profile needs convex data");
    std::size_t node = f.grid().nearest(x);
    Vec slope = b ? *b : f.gradient(node);
    if (b) require_subgradient(f, node, slope);
    ProfileOptions po = opt;
    po.kink = is_kink(f, node);
    return SectionProfile::build(f, node, slope, po);
}

MAResult eval_ma_oracle(const GridFunction& f, const Vec& x, const OperatorParams& op, std::optional<Vec> b,
                        const EvalOptions& opt) {
    if (op.d != f.dim()) throw ValidationError("operator dimension does not match the function");
    const KernelSpec k = KernelSpec::full();
    require_growth(f, k);
    const std::size_t node = f.grid().nearest(x);
    MAResult res;
    res.node = node;
    res.x = f.grid().coord(node);
    PlaneCheck pc = supporting_plane_check(f, node);
    if (!pc.supported) {
        res.value = -kInf;
        res.flags = kNonconvex;
        res.witness = pc.witness;
        return res;
    }
    Vec slope;
    bool kink = is_kink(f, node);
    if (b) {
        require_subgradient(f, node, *b);
        slope = *b;
    } else {
        SubdifferentialSet sd = hull_subdifferential(f, node);
        if (sd.full_dimensional) {
            res.value = kInf;
            return res;
        }
        slope = sd.singleton ? sd.vertices[0] : pc.gradient;
    }
    SectionProfile p = SectionProfile::build(f, node, slope, profile_for(opt, k, kink));
    res.b = slope;
    res.flags = p.flags();
    res.value = rearranged_integral(radial_rearrangement(p), op);
    return res;
}

LimitStudy scaled_limit_study(const GridFunction& f, const Vec& x, const std::vector<double>& s_list,
                              const EvalOptions& opt) {
    LimitStudy out;
    if (s_list.empty()) return out;
    for (double s : s_list) OperatorParams::make(f.dim(), s);
    const KernelSpec k = KernelSpec::full();
    require_growth(f, k);
    const std::size_t node = f.grid().nearest(x);
    PlaneCheck pc = supporting_plane_check(f, node);
    std::optional<SectionProfile> p;
    bool infinite = false;
    if (pc.supported) {
        SubdifferentialSet sd = hull_subdifferential(f, node);
        if (sd.full_dimensional) infinite = true;
        else p = SectionProfile::build(f, node, sd.singleton ? sd.vertices[0] : pc.gradient, profile_for(opt, k, false));
    }
    for (double s : s_list) {
        double v = !pc.supported ? -kInf : infinite ? kInf : p->integrate(OperatorParams::make(f.dim(), s), k);
        out.s.push_back(s);
        out.scaled.push_back((2.0 - s) * v);
    }
    for (std::size_t i = 1; i < out.scaled.size(); ++i) out.gaps.push_back(std::abs(out.scaled[i] - out.scaled[i - 1]));
    for (std::size_t i = 1; i < out.gaps.size(); ++i)
        if (!(out.gaps[i] < out.gaps[i - 1])) out.gaps_decreasing = false;
    return out;
}

std::string ma_csv_header(int d) {
    std::string h;
    for (int a = 0; a < d; ++a) h += "x" + std::to_string(a + 1) + ",";
    for (int a = 0; a < d; ++a) h += "b" + std::to_string(a + 1) + ",";
    return h + "kernel,s,value,flags";
}

std::string ma_csv_row(const MAResult& r, int d, const KernelSpec& k, double s) {
    std::string row;
    for (int a = 0; a < d; ++a) row += format_extended(r.x[a]) + ",";
    for (int a = 0; a < d; ++a) row += format_extended(r.b[a]) + ",";
    return row + k.text() + "," + format_extended(s) + "," + format_extended(r.value) + "," + flag_tokens(r.flags);
}

}  // namespace nlma
