#pragma once

#include <complex>
#include <functional>
#include <memory>
#include <vector>

#include "nlma/grid_function.hpp"

namespace nlma {

// Normalizing constant of (-Delta)^{s/2} f(x) = C(d,s) PV int (f(x) - f(y)) |x-y|^{-d-s} dy.
double frac_laplacian_constant(int d, double s);

// Real-to-complex transform on a periodic grid with n[a] points of spacing h per axis.
// Plans are built once and shared; applications allocate their own buffers.
class SpectralPlan {
public:
    SpectralPlan(int d, Index n, double h);
    ~SpectralPlan();
    SpectralPlan(const SpectralPlan&) = delete;
    SpectralPlan& operator=(const SpectralPlan&) = delete;

    int dim() const { return d_; }
    const Index& shape() const { return n_; }
    double spacing() const { return h_; }
    std::size_t size() const { return std::size_t(n_[0]) * n_[1] * n_[2]; }
    std::size_t spectrum_size() const;
    // |xi| of spectral coefficient k.
    double frequency(std::size_t k) const;

    std::vector<std::complex<double>> forward(const std::vector<double>& field) const;
    std::vector<double> inverse(const std::vector<std::complex<double>>& coeffs) const;
    // inverse(m(|xi|) forward(field))
    std::vector<double> apply(const std::vector<double>& field, const std::function<double(double)>& m) const;

private:
    int d_;
    Index n_;
    double h_;
    struct Plans;
    std::unique_ptr<Plans> plans_;
};

// A periodic field together with its spectrum.
struct SpectralField {
    std::shared_ptr<const SpectralPlan> plan;
    std::vector<double> values;
    std::vector<std::complex<double>> coeffs;

    static SpectralField from_values(std::shared_ptr<const SpectralPlan> plan, std::vector<double> v);
    std::vector<double> reconstruct() const { return plan->inverse(coeffs); }
};

// (-Delta)^{s/2} of the smooth cone model sqrt(c^2 + y^T M y) (or its log-sum-exp
// analogue) at x, by ray quadrature.
double cone_frac_laplacian(const ConeModel& cone, const Vec& x, double s, double c = 1.0);

struct SpectralOptions {
    // Width of the boundary band as a fraction of the box half-width.
    double band = 0.1;
    // Largest allowed deviation of the bounded part from its band mean, relative to scale.
    double band_tol = 1e-3;
    // Allowed deviation of the fitted barrier decay exponent from 1 - s.
    double decay_tol = 0.15;
};

// (-Delta)^{s/2} f, standard normalization: the symbol is |xi|^s. Nonpositive at minima.
GridFunction frac_laplacian(const GridFunction& f, double s, const SpectralOptions& opt = {});

// (I + coef (-Delta)^{s/2})^{-1} g, symbol 1/(1 + coef |xi|^s).
GridFunction resolvent_apply(const GridFunction& g, double s, double coef = 1.0, const SpectralOptions& opt = {});

struct Barrier {
    GridFunction w;
    // Fitted tail |w(x)| ~ C (1 + |x|)^exponent over |x| in [L/2, L].
    double C = 0.0;
    double exponent = 0.0;
};

// Upper barrier for MA u = u - phi: w solves (I + A(-Delta)^{s/2}) w = L phi with
// A = 1/C(d,s) and L the integral operator with kernel |y|^{-d-s}, so that
// MA(phi + w) <= L(phi + w) = w.
Barrier build_upper_barrier(const GridFunction& phi, double s, const SpectralOptions& opt = {});

}  // namespace nlma
