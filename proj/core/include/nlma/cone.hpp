#pragma once

#include <string>
#include <vector>

#include "nlma/types.hpp"

namespace nlma {

// Degree-one homogeneous convex profile Phi describing a function at infinity.
class ConeModel {
public:
    enum class Kind { None, Ellipsoidal, Polyhedral };

    ConeModel() = default;
    // Phi(y) = sqrt(y^T M y), M symmetric positive definite.
    static ConeModel ellipsoidal(int d, const Mat& m);
    // Phi(y) = max_i p_i . y
    static ConeModel polyhedral(int d, std::vector<Vec> slopes);

    Kind kind() const { return kind_; }
    bool present() const { return kind_ != Kind::None; }
    int dim() const { return d_; }
    const Mat& matrix() const { return m_; }
    const std::vector<Vec>& slopes() const { return slopes_; }

    double phi(const Vec& y) const;
    // Smooth convex function within O(c) of Phi: sqrt(c^2 + y^T M y) or a log-sum-exp.
    double smooth(const Vec& y, double c) const;
    Vec smooth_grad(const Vec& y, double c) const;

    // Phi(theta) - b.theta > 0 on all sampled unit directions (exact for d = 1).
    bool interior_slope(const Vec& b, double tol = 0.0) const;
    double min_margin(const Vec& b) const;
    // |{y : Phi(y) - b.y < 1}|, +inf when the interior-slope test fails.
    double unit_section_volume(const Vec& b) const;

    // "ellipsoidal m11 m12 ..." or "polyhedral k p11 ... " for the grid file header.
    std::string describe() const;
    static ConeModel parse(int d, const std::string& name, const std::vector<double>& params);

private:
    Kind kind_ = Kind::None;
    int d_ = 0;
    Mat m_{};
    std::vector<Vec> slopes_;
};

}  // namespace nlma
