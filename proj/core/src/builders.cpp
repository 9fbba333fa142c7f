#include "nlma/builders.hpp"

#include <algorithm>
#include <sstream>

#include <Eigen/Dense>

#include "nlma/grid_io.hpp"

namespace nlma {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t");
    auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    std::istringstream is(s);
    is >> out;
    return !is.fail() && is.eof();
}

Mat read_matrix(const BuilderSpec& spec, int d) {
    auto it = spec.numbers.find("M");
    if (it == spec.numbers.end()) return identity_mat();
    const auto& m = it->second;
    Mat M{};
    if (int(m.size()) == d * d) {
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) M[i][j] = m[i * d + j];
    } else if (int(m.size()) == d) {
        for (int i = 0; i < d; ++i) M[i][i] = m[i];
    } else if (m.size() == 1) {
        for (int i = 0; i < d; ++i) M[i][i] = m[0];
    } else {
        throw ValidationError("M must have 1, d or d*d entries");
    }
    for (int i = 0; i < 3; ++i)
        if (i >= d) M[i][i] = 1.0;
    return M;
}

void require_spd(const Mat& M, int d) {
    Eigen::MatrixXd A(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            if (std::abs(M[i][j] - M[j][i]) > 1e-12 * (std::abs(M[i][j]) + 1.0))
                throw ValidationError("M must be symmetric");
            A(i, j) = M[i][j];
        }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    if (!(es.eigenvalues().minCoeff() > 0.0)) throw ValidationError("M must be positive definite");
}

Vec read_vec(const std::vector<double>& v, std::size_t offset, int d) {
    Vec out{0, 0, 0};
    for (int a = 0; a < d; ++a) out[a] = v[offset + a];
    return out;
}

}  // namespace

BuilderSpec BuilderSpec::parse(const std::string& text) {
    BuilderSpec spec;
    auto colon = text.find(':');
    spec.family = trim(text.substr(0, colon));
    if (spec.family.empty()) throw ValidationError("builder spec: missing family name in '" + text + "'");
    if (colon == std::string::npos) return spec;
    std::string rest = text.substr(colon + 1);
    std::string key;
    std::size_t pos = 0;
    while (pos <= rest.size()) {
        auto comma = rest.find(',', pos);
        std::string tok = trim(rest.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
        pos = comma == std::string::npos ? rest.size() + 1 : comma + 1;
        if (tok.empty()) {
            if (comma == std::string::npos && pos > rest.size()) break;
            throw ValidationError("builder spec: empty token in '" + text + "'");
        }
        auto eq = tok.find('=');
        std::string val = tok;
        if (eq != std::string::npos) {
            key = trim(tok.substr(0, eq));
            val = trim(tok.substr(eq + 1));
            if (key.empty()) throw ValidationError("builder spec: token '" + tok + "' has no key");
        } else if (key.empty()) {
            throw ValidationError("builder spec: token '" + tok + "' has no key");
        }
        double x;
        if (parse_double(val, x)) {
            spec.numbers[key].push_back(x);
        } else {
            if (spec.numbers.count(key)) throw ValidationError("builder spec: token '" + tok + "' is not a number");
            spec.strings[key] = val;
        }
    }
    return spec;
}

double BuilderSpec::number(const std::string& key, double fallback) const {
    if (auto st = strings.find(key); st != strings.end())
        throw ValidationError("builder spec: '" + key + "' expects a number, got '" + st->second + "'");
    auto it = numbers.find(key);
    if (it == numbers.end()) return fallback;
    if (it->second.size() != 1) throw ValidationError("builder spec: '" + key + "' must be a single number");
    return it->second[0];
}

std::string BuilderSpec::text() const {
    std::ostringstream os;
    os.precision(17);
    os << family;
    bool first = true;
    for (const auto& [k, v] : numbers) {
        os << (first ? ':' : ',') << k << '=';
        for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
        first = false;
    }
    for (const auto& [k, v] : strings) {
        os << (first ? ':' : ',') << k << '=' << v;
        first = false;
    }
    return os.str();
}

Grid DomainParams::grid() const {
    if (dim < 1 || dim > 3) throw ValidationError("dimension must be 1, 2 or 3");
    if (!(L > 0.0)) throw ValidationError("box half-width must be positive");
    if (nodes > 0) return Grid::make(dim, nodes, L);
    if (!(h > 0.0)) throw ValidationError("grid spacing h must be positive");
    return Grid::with_spacing(dim, L, h);
}

std::vector<std::string> builder_families() {
    return {"smoothcone", "maxplanes", "affine", "quadratic", "negcone", "gauss", "file"};
}

GridFunction make_smooth_cone(const Grid& g, double a, const Mat& m) {
    if (!(a > 0.0)) throw ValidationError("smoothcone: a must be positive");
    require_spd(m, g.dim);
    int d = g.dim;
    Tail t;
    t.cone = ConeModel::ellipsoidal(d, m);
    t.o_max = a;
    t.growth = 1;
    return sample(g, [a, m, d](const Vec& y) { return std::sqrt(a * a + quad_form(m, y, d)) - a; }, t);
}

GridFunction make_max_planes(const Grid& g, const std::vector<Vec>& p, const std::vector<double>& c, double r) {
    if (p.empty()) throw ValidationError("maxplanes: need at least one plane");
    if (r < 0.0) throw ValidationError("maxplanes: smoothing radius must be nonnegative");
    std::vector<double> cc = c;
    cc.resize(p.size(), 0.0);
    Tail t;
    t.cone = ConeModel::polyhedral(g.dim, p);
    double cmax = 0.0;
    for (double x : cc) cmax = std::max(cmax, std::abs(x));
    t.o_max = cmax + r * std::log(double(p.size()));
    t.growth = 1;
    auto f = [p, cc, r](const Vec& y) {
        double top = -kInf;
        for (std::size_t i = 0; i < p.size(); ++i) top = std::max(top, dot(p[i], y) + cc[i]);
        if (r == 0.0) return top;
        double s = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) s += std::exp((dot(p[i], y) + cc[i] - top) / r);
        return top + r * std::log(s);
    };
    return sample(g, f, t);
}

GridFunction make_affine(const Grid& g, const Vec& b, double c) {
    Tail t;
    t.cone = ConeModel::polyhedral(g.dim, {b});
    t.o_max = std::abs(c);
    return sample(g, [b, c](const Vec& y) { return dot(b, y) + c; }, t);
}

GridFunction build_grid_function(const BuilderSpec& spec, const DomainParams& dom) {
    const std::string& fam = spec.family;
    if (fam == "file") {
        auto it = spec.strings.find("path");
        if (it == spec.strings.end()) throw ValidationError("file: missing path=");
        return read_grid_file(it->second);
    }
    if (!spec.strings.empty()) {
        const auto& [k, v] = *spec.strings.begin();
        throw ValidationError("builder spec: '" + k + "' expects a number, got '" + v + "'");
    }
    Grid g = dom.grid();
    int d = g.dim;
    if (fam == "smoothcone") return make_smooth_cone(g, spec.number("a", 1.0), read_matrix(spec, d));
    if (fam == "maxplanes") {
        auto it = spec.numbers.find("p");
        if (it == spec.numbers.end() || it->second.size() % d != 0 || it->second.empty())
            throw ValidationError("maxplanes: p must list d numbers per plane");
        std::vector<Vec> p;
        for (std::size_t i = 0; i < it->second.size(); i += d) p.push_back(read_vec(it->second, i, d));
        std::vector<double> c;
        if (auto ci = spec.numbers.find("c"); ci != spec.numbers.end()) c = ci->second;
        if (c.size() > p.size()) throw ValidationError("maxplanes: more offsets than planes");
        return make_max_planes(g, p, c, spec.number("r", 0.0));
    }
    if (fam == "affine") {
        Vec b{0, 0, 0};
        if (auto it = spec.numbers.find("b"); it != spec.numbers.end()) {
            if (int(it->second.size()) != d) throw ValidationError("affine: b must have d entries");
            b = read_vec(it->second, 0, d);
        }
        return make_affine(g, b, spec.number("c", 0.0));
    }
    if (fam == "quadratic") {
        Mat m = read_matrix(spec, d);
        require_spd(m, d);
        Tail t;
        t.growth = 2;
        return sample(g, [m, d](const Vec& y) { return 0.5 * quad_form(m, y, d); }, t);
    }
    if (fam == "negcone") {
        double a = spec.number("a", 1.0);
        if (!(a > 0.0)) throw ValidationError("negcone: a must be positive");
        Tail t;
        t.growth = 1;
        return sample(g, [a](const Vec& y) { return -std::sqrt(a * a + dot(y, y)); }, t);
    }
    if (fam == "gauss") {
        double amp = spec.number("amp", 1.0);
        double sigma = spec.number("sigma", 1.0);
        if (!(sigma > 0.0)) throw ValidationError("gauss: sigma must be positive");
        Tail t;
        t.cone = ConeModel::polyhedral(d, {Vec{0, 0, 0}});
        t.o_max = std::abs(amp);
        t.growth = 0;
        return sample(g, [amp, sigma](const Vec& y) { return amp * std::exp(-dot(y, y) / (2.0 * sigma * sigma)); }, t);
    }
    throw ValidationError("unknown builder family '" + fam + "'");
}

GridFunction combine(double alpha, const GridFunction& u, double beta, const GridFunction& v) {
    if (!u.grid().same_as(v.grid())) throw ValidationError("combine: grids differ");
    std::vector<double> vals(u.size());
    for (std::size_t k = 0; k < vals.size(); ++k) vals[k] = alpha * u[k] + beta * v[k];
    Tail t;
    t.growth = std::max(u.growth(), v.growth());
    const ConeModel& cu = u.cone();
    const ConeModel& cv = v.cone();
    if (beta == 0.0 && alpha > 0.0 && cu.kind() == ConeModel::Kind::Ellipsoidal) {
        Mat m = cu.matrix();
        for (auto& row : m)
            for (auto& x : row) x *= alpha * alpha;
        t.cone = ConeModel::ellipsoidal(u.dim(), m);
    } else if (cu.present() && !cv.present()) {
        t.cone = cu;
    } else if (cv.present() && !cu.present()) {
        t.cone = cv;
    } else if (cu.present() && cv.present()) {
        // Cone of the combination, sampled as a polyhedral model when the kinds differ.
        if (cu.kind() == ConeModel::Kind::Polyhedral && cv.kind() == ConeModel::Kind::Polyhedral && alpha >= 0 && beta >= 0) {
            std::vector<Vec> s;
            for (const auto& p : cu.slopes())
                for (const auto& q : cv.slopes()) s.push_back(add(scaled(p, alpha), scaled(q, beta)));
            t.cone = ConeModel::polyhedral(u.dim(), s);
        } else if (cu.kind() == ConeModel::Kind::Polyhedral && cu.slopes().size() == 1 && norm(cu.slopes()[0]) == 0.0) {
            t.cone = cv;
        } else if (cv.kind() == ConeModel::Kind::Polyhedral && cv.slopes().size() == 1 && norm(cv.slopes()[0]) == 0.0) {
            t.cone = cu;
        } else if (cu.kind() == ConeModel::Kind::Ellipsoidal && cv.kind() == ConeModel::Kind::Ellipsoidal &&
                   [&] {
                       for (int i = 0; i < 3; ++i)
                           for (int j = 0; j < 3; ++j)
                               if (cu.matrix()[i][j] != cv.matrix()[i][j]) return false;
                       return true;
                   }()) {
            Mat m = cu.matrix();
            for (auto& row : m)
                for (auto& x : row) x *= (alpha + beta) * (alpha + beta);
            t.cone = ConeModel::ellipsoidal(u.dim(), m);
        } else {
            // Tangent-plane sampling of alpha Phi_u + beta Phi_v.
            std::vector<Vec> s;
            int d = u.dim();
            int m = d == 1 ? 2 : (d == 2 ? 256 : 0);
            if (m == 0) throw ValidationError("combine: mixed cone kinds unsupported in 3D");
            for (int k = 0; k < m; ++k) {
                Vec th{0, 0, 0};
                if (d == 1)
                    th[0] = k == 0 ? 1.0 : -1.0;
                else
                    th = {std::cos(2 * kPi * k / m), std::sin(2 * kPi * k / m), 0};
                auto grad = [&](const ConeModel& c) {
                    Vec gsum = c.smooth_grad(scaled(th, 1e6), 1e-6);
                    return gsum;
                };
                s.push_back(add(scaled(grad(cu), alpha), scaled(grad(cv), beta)));
            }
            t.cone = ConeModel::polyhedral(d, s);
        }
    }
    t.o_max = std::abs(alpha) * u.tail().o_max + std::abs(beta) * v.tail().o_max;
    GridFunction uu = u, vv = v;
    t.exact = [uu, vv, alpha, beta](const Vec& y) { return alpha * uu.eval(y) + beta * vv.eval(y); };
    // The exact closed form is only the combination of the two evaluators; inside the
    // box we keep the combined node values.
    return GridFunction(u.grid(), std::move(vals), std::move(t));
}

}  // namespace nlma
