#include "nlma/rays.hpp"

#include <map>
#include <mutex>
#include <utility>

#include <boost/math/special_functions/legendre.hpp>

namespace nlma {

namespace {

void gauss_legendre_raw(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            double p = boost::math::legendre_p(n, z);
            double dp = boost::math::legendre_p_prime(n, z);
            double dz = p / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        double dp = boost::math::legendre_p_prime(n, z);
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
}

}  // namespace

void gauss_legendre01(int n, std::vector<double>& x, std::vector<double>& w) {
    static std::mutex mu;
    static std::map<int, std::pair<std::vector<double>, std::vector<double>>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) {
        std::vector<double> xs, ws;
        gauss_legendre_raw(n, xs, ws);
        for (int i = 0; i < n; ++i) {
            xs[i] = 0.5 * (1.0 - xs[i]);
            ws[i] *= 0.5;
        }
        it = cache.emplace(n, std::make_pair(xs, ws)).first;
    }
    x = it->second.first;
    w = it->second.second;
}

DirectionSet make_directions(int d, int resolution) {
    DirectionSet s;
    s.dim = d;
    if (d == 1) {
        s.dirs = {Vec{1, 0, 0}, Vec{-1, 0, 0}};
        s.weights = {1.0, 1.0};
    } else if (d == 2) {
        int n = std::max(8, resolution);
        for (int k = 0; k < n; ++k) {
            double a = 2.0 * kPi * k / n;
            s.dirs.push_back({std::cos(a), std::sin(a), 0.0});
            s.weights.push_back(2.0 * kPi / n);
        }
    } else if (d == 3) {
        int nz = std::max(4, resolution / 4);
        int na = 2 * nz;
        std::vector<double> z, wz;
        gauss_legendre01(nz, z, wz);
        for (int i = 0; i < nz; ++i) {
            double c = 2.0 * z[i] - 1.0;
            double sn = std::sqrt(std::max(0.0, 1.0 - c * c));
            for (int k = 0; k < na; ++k) {
                double a = 2.0 * kPi * (k + 0.5) / na;
                s.dirs.push_back({sn * std::cos(a), sn * std::sin(a), c});
                s.weights.push_back(2.0 * wz[i] * 2.0 * kPi / na);
            }
        }
    } else {
        throw ValidationError("dimension must be 1, 2 or 3");
    }
    return s;
}

}  // namespace nlma
