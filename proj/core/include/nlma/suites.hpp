#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "nlma/grid_function.hpp"
#include "nlma/kernel.hpp"
#include "nlma/operator.hpp"

namespace nlma {

struct SuiteOptions {
    std::uint64_t seed = 7;
    int instances = 100;
    // Relative tolerance of each inequality.
    double tol = 1e-6;
    double s = 1.5;
};

struct SuiteResult {
    std::string name;
    int passed = 0;
    int total = 0;
    // Largest relative violation seen (<= 0 when everything holds with margin).
    double worst = -kInf;
    // First failing instance, empty when all pass.
    std::string detail;
    bool ok() const { return passed == total; }
};

// Random smooth strictly convex cone-asymptotic function: smooth cone with random a, M,
// optionally plus a smoothed max of planes.
GridFunction random_convex(std::mt19937_64& rng, const Grid& g);
// A random node in the inner half of the box.
std::size_t random_inner_node(std::mt19937_64& rng, const Grid& g);
// c (sqrt(a^2 + |y - x|^2) - a): nonnegative, convex, zero at x.
GridFunction touching_bump(const Grid& g, const Vec& x, double c, double a);

// u >= v, u(x) = v(x) => MA u(x) >= MA v(x).
SuiteResult monotonicity_suite(const SuiteOptions& opt);
// MA((u+v)/2)(x) >= (MA u(x) + MA v(x))/2.
SuiteResult concavity_suite(const SuiteOptions& opt);
// Capped(n) nondecreasing in n and bounded by Full.
SuiteResult capped_suite(const SuiteOptions& opt);
// NearPinned(eps) >= Full, nonincreasing as eps shrinks.
SuiteResult near_pinned_suite(const SuiteOptions& opt);
// Localized(R) <= Full, and constant in x on quadratics.
SuiteResult localized_suite(const SuiteOptions& opt);
// Envelope below f, convex, idempotent, and exact on convex data.
SuiteResult envelope_suite(const SuiteOptions& opt);
// mu of the radial rearrangement matches mu of the section profile.
SuiteResult rearrangement_suite(const SuiteOptions& opt);
// Plane waves are eigenfunctions of the periodic multiplier; the resolvent inverts
// I + c (-Delta)^{s/2} on decaying data.
SuiteResult spectral_suite(const SuiteOptions& opt);

std::vector<SuiteResult> run_all_suites(const SuiteOptions& opt);

// Least-squares slope of log y against log x.
double fit_exponent(const std::vector<double>& x, const std::vector<double>& y);

// Fitted exponent of |NearPinned(eps) - Full| over the given eps values.
struct GapStudy {
    std::vector<double> eps;
    std::vector<double> gap;
    double exponent = 0.0;
};
GapStudy near_pinned_gap(const GridFunction& f, const Vec& x, const OperatorParams& op, const std::vector<double>& eps);

// Modulus of continuity of x -> MA f(x) along the line x0 + t e: omega(delta) is the
// largest difference between values delta apart, for delta = h, 2h, 4h, 8h; returns the
// fitted exponent.
struct HolderStudy {
    std::vector<double> delta;
    std::vector<double> omega;
    double exponent = 0.0;
};
HolderStudy holder_study(const GridFunction& f, const Vec& x0, int axis, int samples, const OperatorParams& op);

}  // namespace nlma
