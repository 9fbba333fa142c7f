#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nlma/grid_function.hpp"
#include "nlma/kernel.hpp"
#include "nlma/profile.hpp"

namespace nlma {

struct EvalOptions {
    ProfileOptions profile;
    // Barycentric refinement levels used for the sup over a kinked subdifferential.
    int refine = 1;
};

struct MAResult {
    double value = 0.0;
    std::size_t node = 0;
    // Grid node the query point snapped to.
    Vec x{};
    // Slope attaining the value (the last one tried when the value is -inf).
    Vec b{};
    unsigned flags = 0;
    // Offset y with f(x+y) below the tangent plane, when value = -inf.
    Vec witness{};
};

// b defaults to the sup over the subdifferential; a supplied b must be a subgradient.
MAResult eval_ma(const GridFunction& f, const Vec& x, const OperatorParams& op, const KernelSpec& k,
                 std::optional<Vec> b = std::nullopt, const EvalOptions& opt = {});
MAResult eval_ma_node(const GridFunction& f, std::size_t node, const OperatorParams& op, const KernelSpec& k,
                      std::optional<Vec> b = std::nullopt, const EvalOptions& opt = {});

// Rearrangement-based evaluation of the Full kernel, independent of the level quadrature.
MAResult eval_ma_oracle(const GridFunction& f, const Vec& x, const OperatorParams& op,
                        std::optional<Vec> b = std::nullopt, const EvalOptions& opt = {});

// Section profile at x for slope b (default: the gradient); f must be convex-tagged and b
// a subgradient.
SectionProfile section_profile(const GridFunction& f, const Vec& x, std::optional<Vec> b = std::nullopt,
                               const ProfileOptions& opt = {});

struct LimitStudy {
    std::vector<double> s;
    // (2 - s) MA f(x)
    std::vector<double> scaled;
    // |scaled[i+1] - scaled[i]|
    std::vector<double> gaps;
    bool gaps_decreasing = true;
};

// One section profile, integrated for every order in s_list.
LimitStudy scaled_limit_study(const GridFunction& f, const Vec& x, const std::vector<double>& s_list,
                              const EvalOptions& opt = {});

// "x1,..,b1,..,kernel,s,value,flags"
std::string ma_csv_header(int d);
std::string ma_csv_row(const MAResult& r, int d, const KernelSpec& k, double s);

}  // namespace nlma
