#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

namespace nlma {

// Points and slopes in R^d, d <= 3. Unused trailing coordinates stay zero.
using Vec = std::array<double, 3>;
using Mat = std::array<std::array<double, 3>, 3>;
using Index = std::array<int, 3>;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = 3.14159265358979323846;

inline double dot(const Vec& a, const Vec& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }
inline Vec add(const Vec& a, const Vec& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec sub(const Vec& a, const Vec& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec scaled(const Vec& a, double t) { return {a[0] * t, a[1] * t, a[2] * t}; }
inline Vec axpy(const Vec& x, double t, const Vec& d) { return {x[0] + t * d[0], x[1] + t * d[1], x[2] + t * d[2]}; }

inline double quad_form(const Mat& m, const Vec& y, int d) {
    double s = 0.0;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) s += y[i] * m[i][j] * y[j];
    return s;
}

inline Mat identity_mat() { return {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}}; }

// Volume of the unit ball in R^d.
inline double unit_ball_volume(int d) {
    switch (d) {
        case 1: return 2.0;
        case 2: return kPi;
        case 3: return 4.0 * kPi / 3.0;
        default: return std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
    }
}

// Thrown for malformed input and violated preconditions; the CLI maps it to exit code 2.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace nlma
