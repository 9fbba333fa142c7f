#pragma once

#include <functional>
#include <string>
#include <vector>

#include "nlma/grid_function.hpp"
#include "nlma/kernel.hpp"

namespace nlma {

enum ProfileFlag : unsigned {
    kNonconvex = 1u,
    kFatLevel = 2u,
    kConeUnbounded = 4u,
    kHessianFallback = 8u,
};

// "nonconvex;fat-level" style token list, empty when no flag is set.
std::string flag_tokens(unsigned flags);

// Increment g(rho) = u(x + rho theta) - u(x) - rho b.theta along one direction, made
// nondecreasing and nonnegative. Below rho[1] it follows g = c rho^p; between samples it
// is linear; past the last sample it grows with the slope of the last chord, or stays
// flat when that slope vanishes.
struct RayProfile {
    Vec dir{};
    double weight = 0.0;
    std::vector<double> rho;
    std::vector<double> g;
    double near_p = 2.0;
    double far_slope = 0.0;

    // inf{rho : g(rho) >= t}, +inf when the ray never reaches t.
    double radius(double t) const;
    // int_a^b g(rho) rho^{-1-s} d rho
    double weighted_integral(double a, double b, double s) const;
};

struct ProfileOptions {
    // Ray count per dimension (2D angles, 3D resolution passed to make_directions).
    int rays2 = 64;
    int rays3 = 32;
    double ratio = 1.05;
    // Samples reach far_factor times the box diagonal.
    double far_factor = 64.0;
    // Extra reach, e.g. the radius of a localized kernel.
    double min_reach = 0.0;
    // Fit the near exponent instead of assuming a quadratic contact.
    bool kink = false;
};

// The map t -> mu(t) = |{y : u(y) - u(x) - b.(y-x) < t}|, assembled from ray profiles
// by mu(t) = (1/d) sum_theta w_theta rho_theta(t)^d.
class SectionProfile {
public:
    static SectionProfile build(const GridFunction& f, std::size_t node, const Vec& b, const ProfileOptions& opt = {});
    // Radial model: one ray per direction with the same profile g(rho).
    static SectionProfile radial(int d, const std::function<double(double)>& g, double rho_max, double h);

    int dim() const { return d_; }
    const Vec& x() const { return x_; }
    const Vec& b() const { return b_; }
    unsigned flags() const { return flags_; }
    const std::vector<RayProfile>& rays() const { return rays_; }

    double measure(double t) const;
    // Measure of the part of the section outside B_eps.
    double measure_outside(double t, double eps) const;
    // Every positive level has infinite measure.
    bool all_infinite() const { return t_inf_ <= 0.0; }
    // mu(t) = inf for t > t_inf.
    double t_inf() const { return t_inf_; }
    // mu(0+), positive on a fat contact set.
    double contact_measure() const;

    // Level integral of the kernel-variant tail function against mu.
    double integrate(const OperatorParams& op, const KernelSpec& k) const;

private:
    void finish();
    bool head_integral(const OperatorParams& op, const KernelSpec& k, double& out) const;
    // Fills mu (and mu outside B_eps when eps > 0) at increasing levels t.
    void sweep(const std::vector<double>& t, std::vector<double>& mu, double eps, std::vector<double>* mu_out) const;

    int d_ = 1;
    Vec x_{};
    Vec b_{};
    unsigned flags_ = 0;
    double t_inf_ = kInf;
    // Plateaus below this level count as flat.
    double level_tol_ = 0.0;
    std::vector<RayProfile> rays_;
};

// v(r) = inf{t : mu(t) >= |B_1| r^d}, the radial rearrangement of the increment.
class RadialProfile {
public:
    RadialProfile() = default;
    RadialProfile(int d, std::function<double(double)> mu, double t_inf, bool zero = false);

    double value(double r) const;
    // Identically zero: every positive level has infinite measure.
    bool zero() const { return zero_; }
    int dim() const { return d_; }
    // Tabulated values on a geometric radius grid, for reports.
    std::vector<std::pair<double, double>> table(double r0, double r1, int n) const;

private:
    int d_ = 1;
    std::function<double(double)> mu_;
    double t_inf_ = kInf;
    bool zero_ = false;
};

RadialProfile radial_rearrangement(const SectionProfile& p);

// d|B_1| int_0^inf v(r) r^{-1-s} dr by adaptive quadrature in log r, with power-law
// endpoint corrections.
double rearranged_integral(const RadialProfile& v, const OperatorParams& op);

}  // namespace nlma
