#pragma once

#include <string>

#include "nlma/types.hpp"

namespace nlma {

// Order s in (1, 2), dimension d, and the constant C_ma = (d/s)|B_1|^{1+s/d} of the level
// formula MA u = C_ma int_0^inf mu(t)^{-s/d} dt. The kernel is |y|^{-d-s} with no
// normalizing factor.
struct OperatorParams {
    int d = 1;
    double s = 1.5;
    double ball = 2.0;
    double C_ma = 0.0;

    static OperatorParams make(int d, double s);
    // (d/s)|B_1|^{1+s/d}
    static double constant(int d, double s);
};

// Family of admissible kernels the infimum runs over.
struct KernelSpec {
    enum class Variant { Full, NearPinned, Capped, Localized };
    Variant variant = Variant::Full;
    // eps for NearPinned, n for Capped, R for Localized.
    double param = 0.0;

    static KernelSpec full() { return {}; }
    static KernelSpec near_pinned(double eps);
    static KernelSpec capped(double n);
    static KernelSpec localized(double R);
    // full | nearpinned:eps=.. | capped:n=.. | localized:R=..
    static KernelSpec parse(const std::string& text);
    std::string text() const;
};

}  // namespace nlma
