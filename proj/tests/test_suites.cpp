#include <doctest.h>

#include <cmath>

#include "nlma/builders.hpp"
#include "nlma/suites.hpp"

using namespace nlma;

namespace {

SuiteOptions small() {
    SuiteOptions o;
    o.seed = 3;
    o.instances = 20;
    return o;
}

void require_pass(const SuiteResult& r) {
    CAPTURE(r.name);
    CAPTURE(r.detail);
    CHECK(r.passed == r.total);
    CHECK(r.total > 0);
}

}  // namespace

TEST_SUITE("properties") {

TEST_CASE("monotonicity under touching from below") { require_pass(monotonicity_suite(small())); }
TEST_CASE("midpoint concavity") { require_pass(concavity_suite(small())); }
TEST_CASE("capped kernels increase to the full kernel") { require_pass(capped_suite(small())); }
TEST_CASE("near-pinned kernels decrease to the full kernel") { require_pass(near_pinned_suite(small())); }
TEST_CASE("localized kernels") { require_pass(localized_suite(small())); }
TEST_CASE("envelope properties") { require_pass(envelope_suite(small())); }
TEST_CASE("rearrangement preserves the level measure") { require_pass(rearrangement_suite(small())); }
TEST_CASE("spectral identities") { require_pass(spectral_suite(small())); }

TEST_CASE("suites are deterministic in the seed") {
    auto a = monotonicity_suite(small());
    auto b = monotonicity_suite(small());
    CHECK(a.worst == b.worst);
    CHECK(a.passed == b.passed);
}

TEST_CASE("exponent fit recovers a power law") {
    std::vector<double> x{1, 2, 4, 8}, y;
    for (double v : x) y.push_back(3.0 * std::pow(v, 0.7));
    CHECK(fit_exponent(x, y) == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("touching bump vanishes at its center") {
    auto g = Grid::with_spacing(2, 2.0, 0.1);
    auto b = touching_bump(g, {0.5, 0.5, 0}, 2.0, 0.3);
    const std::size_t k = g.nearest({0.5, 0.5, 0});
    CHECK(b[k] == doctest::Approx(0.0).scale(1e-14));
    for (double v : b.values()) CHECK(v >= 0);
    CHECK(b.convex());
}

}
