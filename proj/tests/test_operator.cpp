#include <doctest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>

#include "nlma/builders.hpp"
#include "nlma/extended.hpp"
#include "nlma/operator.hpp"
#include "nlma/profile.hpp"

using namespace nlma;

namespace {

// (d/s)|B_1| 2^{1-s} B(1 - s/2, s - 1)
double cone_closed_form(int d, double s) {
    return d / s * unit_ball_volume(d) * std::pow(2.0, 1.0 - s) * boost::math::beta(1.0 - s / 2.0, s - 1.0);
}

// int_0^inf (t^2 + 2t)^{-s/2} dt by double-exponential quadrature.
double level_integral(double s) {
    auto f = [s](double t) { return std::pow(t * t + 2.0 * t, -s / 2.0); };
    boost::math::quadrature::tanh_sinh<double> ts;
    boost::math::quadrature::exp_sinh<double> es;
    return ts.integrate(f, 0.0, 1.0) + es.integrate(f, 1.0, std::numeric_limits<double>::infinity());
}

GridFunction build(const std::string& spec, int d, double L, double h) {
    DomainParams dp;
    dp.dim = d;
    dp.L = L;
    dp.h = h;
    return build_grid_function(BuilderSpec::parse(spec), dp);
}

std::string value_token(const std::string& row) { return row.substr(row.rfind(',', row.rfind(',') - 1) + 1); }

}  // namespace

TEST_SUITE("operator") {

TEST_CASE("beta closed form agrees with the level quadrature and frozen values") {
    struct Case {
        int d;
        double s, frozen;
    };
    // Independent reference quadrature.
    const Case cases[] = {{1, 1.3, 6.873447473185467},  {1, 1.5, 4.944199139470324},
                          {1, 1.8, 6.614332342335395},  {2, 1.3, 21.59357208659479},
                          {2, 1.5, 15.532659694444948}, {2, 1.8, 20.779537895082246}};
    for (const auto& c : cases) {
        CAPTURE(c.d);
        CAPTURE(c.s);
        CHECK(cone_closed_form(c.d, c.s) == doctest::Approx(c.frozen).epsilon(1e-12));
        CHECK(c.d / c.s * unit_ball_volume(c.d) * level_integral(c.s) == doctest::Approx(c.frozen).epsilon(1e-9));
    }
}

TEST_CASE("smooth cone at the vertex matches the closed form") {
    for (int d : {1, 2})
        for (double s : {1.3, 1.5, 1.8}) {
            auto f = d == 1 ? build("smoothcone:a=1", 1, 20, 0.05) : build("smoothcone:a=1", 2, 8, 0.125);
            auto r = eval_ma(f, {0, 0, 0}, OperatorParams::make(d, s), KernelSpec::full());
            CAPTURE(d);
            CAPTURE(s);
            CHECK(r.value == doctest::Approx(cone_closed_form(d, s)).epsilon(0.02));
        }
}

TEST_CASE("operator constant") {
    CHECK(OperatorParams::constant(1, 1.5) == doctest::Approx(std::pow(2.0, 2.5) / 1.5));
    CHECK(OperatorParams::constant(2, 1.5) == doctest::Approx(2.0 / 1.5 * std::pow(M_PI, 1.75)));
    CHECK_THROWS_AS(OperatorParams::make(1, 2.0), ValidationError);
    CHECK_THROWS_AS(OperatorParams::make(4, 1.5), ValidationError);
}

TEST_CASE("affine data gives zero") {
    auto f = build("affine:b=0.3,c=1", 1, 8, 0.05);
    auto r = eval_ma(f, {0.5, 0, 0}, OperatorParams::make(1, 1.5), KernelSpec::full());
    CHECK(r.value == 0.0);
    CHECK(value_token(ma_csv_row(r, 1, KernelSpec::full(), 1.5)) == "0,cone-unbounded");
}

TEST_CASE("absolute value: inf at the kink, zero elsewhere") {
    auto f = build("maxplanes:p=1,-1,r=0", 1, 8, 0.05);
    auto op = OperatorParams::make(1, 1.5);
    CHECK(eval_ma(f, {0, 0, 0}, op, KernelSpec::full()).value == kInf);
    CHECK(eval_ma(f, {0.5, 0, 0}, op, KernelSpec::full()).value == 0.0);
    CHECK(eval_ma(f, {-2.0, 0, 0}, op, KernelSpec::full()).value == 0.0);
    // Capped kernels stay finite at the kink.
    CHECK(std::isfinite(eval_ma(f, {0, 0, 0}, op, KernelSpec::capped(100)).value));
}

TEST_CASE("concave data gives -inf and a witness") {
    auto f = build("negcone:a=1", 2, 4, 0.1);
    auto r = eval_ma(f, {0.5, 0.5, 0}, OperatorParams::make(2, 1.5), KernelSpec::full());
    CHECK(r.value == -kInf);
    CHECK(norm(r.witness) > 0);
    const double inc = f.eval(add(r.x, r.witness)) - f.eval(r.x) - dot(r.b, r.witness);
    CHECK(inc < 0);
}

TEST_CASE("quadratic growth is rejected by the full kernel only") {
    auto f = build("quadratic:M=1", 1, 4, 0.05);
    auto op = OperatorParams::make(1, 1.5);
    CHECK_THROWS_AS(eval_ma(f, {0, 0, 0}, op, KernelSpec::full()), ValidationError);
    auto r = eval_ma(f, {0, 0, 0}, op, KernelSpec::localized(1.0));
    // d|B_1| int_0^1 (r^2/2) r^{-1-s} dr = 1 / (2 - s)
    CHECK(r.value == doctest::Approx(1.0 / (2.0 - 1.5)).epsilon(0.02));
}

TEST_CASE("oracle agrees with the level quadrature") {
    auto op1 = OperatorParams::make(1, 1.5);
    auto f1 = build("smoothcone:a=0.7", 1, 20, 0.05);
    for (double x : {-3.0, -0.4, 0.0, 1.1, 5.0}) {
        auto a = eval_ma(f1, {x, 0, 0}, op1, KernelSpec::full());
        auto b = eval_ma_oracle(f1, {x, 0, 0}, op1);
        CHECK(a.value == doctest::Approx(b.value).epsilon(0.01));
    }
    auto op2 = OperatorParams::make(2, 1.3);
    auto f2 = build("smoothcone:a=1,M=2,0.3,0.3,1", 2, 8, 0.125);
    for (Vec x : {Vec{0, 0, 0}, Vec{1, -0.5, 0}, Vec{-2, 1, 0}}) {
        auto a = eval_ma(f2, x, op2, KernelSpec::full());
        auto b = eval_ma_oracle(f2, x, op2);
        CHECK(a.value == doctest::Approx(b.value).epsilon(0.01));
    }
}

TEST_CASE("kernel spec parsing") {
    CHECK(KernelSpec::parse("full").variant == KernelSpec::Variant::Full);
    auto k = KernelSpec::parse("nearpinned:eps=0.25");
    CHECK(k.variant == KernelSpec::Variant::NearPinned);
    CHECK(k.param == 0.25);
    CHECK(k.text() == "nearpinned:eps=0.25");
    CHECK(KernelSpec::parse("capped:n=1e6").param == 1e6);
    CHECK(KernelSpec::parse("localized:R=2").variant == KernelSpec::Variant::Localized);
    CHECK_THROWS_AS(KernelSpec::parse("capped:n=-1"), ValidationError);
    CHECK_THROWS_AS(KernelSpec::parse("nearpinned:r=1"), ValidationError);
    CHECK_THROWS_AS(KernelSpec::parse("wide"), ValidationError);
}

TEST_CASE("extended real tokens") {
    CHECK(format_extended(kInf) == "inf");
    CHECK(format_extended(-kInf) == "-inf");
    CHECK(format_extended(0.0) == "0");
    CHECK(format_extended(0.1) == "0.1");
    CHECK(parse_extended("-inf") == -kInf);
    CHECK(parse_extended(format_extended(1.0 / 3.0)) == 1.0 / 3.0);
    CHECK_THROWS_AS(parse_extended("1.5x"), ValidationError);
}

TEST_CASE("radial rearrangement of a quadratic model") {
    for (int d : {1, 2}) {
        auto p = SectionProfile::radial(d, [](double r) { return 0.5 * r * r; }, 100.0, 0.01);
        auto v = radial_rearrangement(p);
        for (double r : {0.1, 0.5, 1.0, 3.0}) CHECK(v.value(r) == doctest::Approx(0.5 * r * r).epsilon(1e-3));
    }
}

TEST_CASE("rearrangement of the smooth cone increment at the vertex") {
    auto f = build("smoothcone:a=1", 2, 8, 0.125);
    auto v = radial_rearrangement(section_profile(f, {0, 0, 0}));
    for (double r : {0.5, 1.0, 2.0, 5.0}) CHECK(v.value(r) == doctest::Approx(std::sqrt(1 + r * r) - 1).epsilon(0.02));
}

TEST_CASE("fat level set: rearrangement is flat on the matching radii") {
    // Increment 0 on |y| < 1, then |y| - 1: mu jumps at t = 0.
    auto p = SectionProfile::radial(1, [](double r) { return std::max(0.0, r - 1.0); }, 100.0, 0.01);
    auto v = radial_rearrangement(p);
    CHECK(v.value(0.5) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(v.value(0.9) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(v.value(2.0) == doctest::Approx(1.0).epsilon(1e-2));
}

TEST_CASE("scaled limit follows the Hessian determinant") {
    auto a = build("smoothcone:a=1", 2, 8, 0.125);
    auto b = build("smoothcone:a=1,M=4,0,0,1", 2, 8, 0.125);
    const std::vector<double> s{1.9, 1.95, 1.99};
    auto sa = scaled_limit_study(a, {0, 0, 0}, s);
    auto sb = scaled_limit_study(b, {0, 0, 0}, s);
    CHECK(sb.scaled.back() / sa.scaled.back() == doctest::Approx(2.0).epsilon(0.05));
    CHECK(sa.gaps_decreasing);
    CHECK(sb.gaps_decreasing);
}

TEST_CASE("csv header and row layout") {
    CHECK(ma_csv_header(2) == "x1,x2,b1,b2,kernel,s,value,flags");
    auto f = build("smoothcone:a=1", 1, 8, 0.05);
    auto r = eval_ma(f, {0, 0, 0}, OperatorParams::make(1, 1.5), KernelSpec::capped(10));
    auto row = ma_csv_row(r, 1, KernelSpec::capped(10), 1.5);
    CHECK(row.rfind("0,0,capped:n=10,1.5,", 0) == 0);
}

}
