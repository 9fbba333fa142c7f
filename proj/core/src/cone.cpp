#include "nlma/cone.hpp"

#include <algorithm>
#include <sstream>

#include "nlma/rays.hpp"

namespace nlma {

namespace {

const DirectionSet& fine_directions(int d) {
    static const DirectionSet s1 = make_directions(1, 0);
    static const DirectionSet s2 = make_directions(2, 2048);
    static const DirectionSet s3 = make_directions(3, 160);
    return d == 1 ? s1 : (d == 2 ? s2 : s3);
}

double det3(const Mat& m, int d) {
    if (d == 1) return m[0][0];
    if (d == 2) return m[0][0] * m[1][1] - m[0][1] * m[1][0];
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

// b^T M^{-1} b by Cramer's rule.
double dual_quad(const Mat& m, const Vec& b, int d) {
    double det = det3(m, d);
    double best = 0.0;
    if (d == 1) return b[0] * b[0] / m[0][0];
    Mat inv{};
    if (d == 2) {
        inv[0][0] = m[1][1] / det;
        inv[1][1] = m[0][0] / det;
        inv[0][1] = -m[0][1] / det;
        inv[1][0] = -m[1][0] / det;
    } else {
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                int i1 = (j + 1) % 3, i2 = (j + 2) % 3, j1 = (i + 1) % 3, j2 = (i + 2) % 3;
                inv[i][j] = (m[i1][j1] * m[i2][j2] - m[i1][j2] * m[i2][j1]) / det;
            }
    }
    best = quad_form(inv, b, d);
    return best;
}

}  // namespace

ConeModel ConeModel::ellipsoidal(int d, const Mat& m) {
    ConeModel c;
    c.kind_ = Kind::Ellipsoidal;
    c.d_ = d;
    c.m_ = m;
    return c;
}

ConeModel ConeModel::polyhedral(int d, std::vector<Vec> slopes) {
    if (slopes.empty()) throw ValidationError("polyhedral cone needs at least one slope");
    ConeModel c;
    c.kind_ = Kind::Polyhedral;
    c.d_ = d;
    c.slopes_ = std::move(slopes);
    return c;
}

double ConeModel::phi(const Vec& y) const {
    switch (kind_) {
        case Kind::Ellipsoidal: return std::sqrt(std::max(0.0, quad_form(m_, y, d_)));
        case Kind::Polyhedral: {
            double best = -kInf;
            for (const auto& p : slopes_) best = std::max(best, dot(p, y));
            return best;
        }
        default: return 0.0;
    }
}

double ConeModel::smooth(const Vec& y, double c) const {
    switch (kind_) {
        case Kind::Ellipsoidal: return std::sqrt(c * c + std::max(0.0, quad_form(m_, y, d_)));
        case Kind::Polyhedral: {
            double top = phi(y);
            double s = 0.0;
            for (const auto& p : slopes_) s += std::exp((dot(p, y) - top) / c);
            return top + c * std::log(s);
        }
        default: return 0.0;
    }
}

Vec ConeModel::smooth_grad(const Vec& y, double c) const {
    Vec g{0, 0, 0};
    switch (kind_) {
        case Kind::Ellipsoidal: {
            double r = std::sqrt(c * c + std::max(0.0, quad_form(m_, y, d_)));
            for (int i = 0; i < d_; ++i) {
                double s = 0.0;
                for (int j = 0; j < d_; ++j) s += m_[i][j] * y[j];
                g[i] = s / r;
            }
            return g;
        }
        case Kind::Polyhedral: {
            double top = phi(y);
            double total = 0.0;
            for (const auto& p : slopes_) {
                double e = std::exp((dot(p, y) - top) / c);
                total += e;
                g = axpy(g, e, p);
            }
            return scaled(g, 1.0 / total);
        }
        default: return g;
    }
}

double ConeModel::min_margin(const Vec& b) const {
    if (!present()) return -kInf;
    const auto& dirs = fine_directions(d_);
    double m = kInf;
    for (const auto& th : dirs.dirs) m = std::min(m, phi(th) - dot(b, th));
    return m;
}

bool ConeModel::interior_slope(const Vec& b, double tol) const {
    if (!present()) return false;
    if (kind_ == Kind::Ellipsoidal) return dual_quad(m_, b, d_) < 1.0 - tol;
    return min_margin(b) > tol;
}

double ConeModel::unit_section_volume(const Vec& b) const {
    if (!interior_slope(b)) return kInf;
    if (kind_ == Kind::Ellipsoidal && norm(b) == 0.0) return unit_ball_volume(d_) / std::sqrt(det3(m_, d_));
    const auto& dirs = fine_directions(d_);
    double v = 0.0;
    for (std::size_t i = 0; i < dirs.size(); ++i)
        v += dirs.weights[i] * std::pow(phi(dirs.dirs[i]) - dot(b, dirs.dirs[i]), -double(d_));
    return v / d_;
}

std::string ConeModel::describe() const {
    std::ostringstream os;
    os.precision(17);
    if (kind_ == Kind::Ellipsoidal) {
        os << "ellipsoidal";
        for (int i = 0; i < d_; ++i)
            for (int j = 0; j < d_; ++j) os << ' ' << m_[i][j];
    } else if (kind_ == Kind::Polyhedral) {
        os << "polyhedral " << slopes_.size();
        for (const auto& p : slopes_)
            for (int i = 0; i < d_; ++i) os << ' ' << p[i];
    } else {
        os << "none";
    }
    return os.str();
}

ConeModel ConeModel::parse(int d, const std::string& name, const std::vector<double>& params) {
    if (name == "none") return {};
    if (name == "ellipsoidal") {
        if (int(params.size()) != d * d) throw ValidationError("ellipsoidal cone needs d*d entries");
        Mat m{};
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) m[i][j] = params[i * d + j];
        return ellipsoidal(d, m);
    }
    if (name == "polyhedral") {
        if (params.empty()) throw ValidationError("polyhedral cone needs a slope count");
        std::size_t k = std::size_t(params[0]);
        if (params.size() != 1 + k * d) throw ValidationError("polyhedral cone: wrong number of slope entries");
        std::vector<Vec> s(k, Vec{0, 0, 0});
        for (std::size_t i = 0; i < k; ++i)
            for (int j = 0; j < d; ++j) s[i][j] = params[1 + i * d + j];
        return polyhedral(d, s);
    }
    throw ValidationError("unknown cone model '" + name + "'");
}

}  // namespace nlma
