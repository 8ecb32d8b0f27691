#include <cmath>
#include <complex>
#include <limits>

#include "doctest.h"
#include "pklab/domain.hpp"
#include "pklab/errors.hpp"

using namespace pklab;

namespace {
double rel(double a, double b) { return std::fabs(a - b) / std::max(std::fabs(b), 1e-300); }
}  // namespace

TEST_CASE("fundamental domain membership") {
    CHECK(ModularPoint{0.0, 1.0}.in_fundamental_domain());
    CHECK(ModularPoint{0.5, 1.0}.in_fundamental_domain());
    CHECK(ModularPoint{-0.5, 0.9}.in_fundamental_domain());           // |z|^2 = 1.06
    CHECK(ModularPoint{0.5, std::sqrt(3.0) / 2.0}.in_fundamental_domain());  // corner rho
    CHECK(ModularPoint{0.0, 100.0}.in_fundamental_domain());
    CHECK_FALSE(ModularPoint{0.51, 1.0}.in_fundamental_domain());
    CHECK_FALSE(ModularPoint{0.3, 0.9}.in_fundamental_domain());  // inside unit circle
    CHECK_FALSE(ModularPoint{0.0, 0.999}.in_fundamental_domain());
    CHECK_FALSE(ModularPoint{0.0, -1.0}.in_fundamental_domain());
}

TEST_CASE("region construction and exact areas") {
    // the full fundamental domain has hyperbolic area pi/3
    Region F = fundamental_domain(std::numeric_limits<double>::infinity());
    CHECK(std::fabs(F.hyperbolic_area - M_PI / 3.0) < 1e-12);
    CHECK(F.subset_of_fundamental_domain());

    // unclipped strip above y = 1: area = width / y0
    Region strip = make_region(-0.5, 0.5, 1.0, std::numeric_limits<double>::infinity(), false);
    CHECK(std::fabs(strip.hyperbolic_area - 1.0) < 1e-14);
    CHECK(strip.subset_of_fundamental_domain());

    // rectangle
    Region box = make_region(0.0, 0.5, 1.0, 2.0, false);
    CHECK(std::fabs(box.hyperbolic_area - 0.5 * (1.0 - 0.5)) < 1e-14);

    // truncated F partitions into the clipped part and the strip above
    Region Flow = fundamental_domain(2.0);
    Region Fhigh = make_region(-0.5, 0.5, 2.0, std::numeric_limits<double>::infinity(), false);
    CHECK(std::fabs(Flow.hyperbolic_area + Fhigh.hyperbolic_area - M_PI / 3.0) < 1e-12);

    // additivity under an x-split of the clipped part
    Region left = make_region(-0.5, 0.1, std::sqrt(3.0) / 2.0, 2.0, true);
    Region right = make_region(0.1, 0.5, std::sqrt(3.0) / 2.0, 2.0, true);
    CHECK(std::fabs(left.hyperbolic_area + right.hyperbolic_area - Flow.hyperbolic_area) < 1e-12);

    // additivity under a y-split crossing the circle top
    Region bot = make_region(-0.5, 0.5, std::sqrt(3.0) / 2.0, 0.95, true);
    Region top = make_region(-0.5, 0.5, 0.95, 2.0, true);
    CHECK(std::fabs(bot.hyperbolic_area + top.hyperbolic_area - Flow.hyperbolic_area) < 1e-12);

    // clip flag is inert when the box sits above the circle
    Region above_c = make_region(-0.5, 0.5, 1.0, 3.0, true);
    Region above_u = make_region(-0.5, 0.5, 1.0, 3.0, false);
    CHECK(std::fabs(above_c.hyperbolic_area - above_u.hyperbolic_area) < 1e-14);

    // y_low follows the circle only where it is above y0
    Region Fc = fundamental_domain(2.0);
    CHECK(std::fabs(Fc.y_low(0.0) - 1.0) < 1e-15);
    CHECK(std::fabs(Fc.y_low(0.5) - std::sqrt(3.0) / 2.0) < 1e-15);
    CHECK(std::fabs(Fc.y_low(0.3) - std::sqrt(1.0 - 0.09)) < 1e-15);

    CHECK_FALSE(make_region(0.2, 0.5, 0.9, 2.0, false).subset_of_fundamental_domain());
    CHECK(make_region(0.2, 0.5, 0.9, 2.0, true).subset_of_fundamental_domain());
    CHECK_FALSE(make_region(0.2, 0.6, 1.5, 2.0, false).subset_of_fundamental_domain());

    CHECK_THROWS_AS(make_region(0.5, -0.5, 1.0, 2.0, false), DomainError);
    CHECK_THROWS_AS(make_region(0.0, 0.5, 2.0, 1.0, false), DomainError);
    CHECK_THROWS_AS(make_region(0.0, 0.5, -0.1, 1.0, false), DomainError);
    // flat bottom at y = 0 has infinite area
    CHECK_THROWS_AS(make_region(0.0, 0.5, 0.0, 1.0, false), DomainError);
}

TEST_CASE("region integrator reproduces closed forms") {
    QuadSpec spec;
    spec.tol = 1e-11;

    // integral of 1 d mu equals the analytically computed area (independent routes)
    Region Flow = fundamental_domain(3.0);
    double a1 = region_integral_real(Flow, [](double, double) { return 1.0; }, spec);
    CHECK(rel(a1, Flow.hyperbolic_area) < 1e-10);

    Region box = make_region(-0.3, 0.4, 0.9, 2.5, false);
    double a2 = region_integral_real(box, [](double, double) { return 1.0; }, spec);
    CHECK(rel(a2, box.hyperbolic_area) < 1e-10);

    // f = y^2 cancels the measure: integral = euclidean area
    Region b2 = make_region(0.0, 1.0, 1.0, 2.0, false);
    double a3 = region_integral_real(b2, [](double, double y) { return y * y; }, spec);
    CHECK(rel(a3, 1.0) < 1e-10);

    // clipped version: integral of y^2 d mu over F cut at y = 2 equals the
    // euclidean area 2 - int sqrt(1-x^2)
    Region Fc = fundamental_domain(2.0);
    double circ = 0.5 * std::sqrt(3.0) / 2.0 + std::asin(0.5);  // int_{-1/2}^{1/2} sqrt(1-x^2)
    double a4 = region_integral_real(Fc, [](double, double y) { return y * y; }, spec);
    CHECK(rel(a4, 2.0 - circ) < 1e-10);

    // complex integrand with separable closed form
    auto fc = [](double x, double y) { return std::complex<double>(x * x, x * y * y); };
    std::complex<double> v = region_integral(b2, fc, spec);
    CHECK(std::fabs(v.real() - (1.0 / 3.0) * 0.5) < 1e-10);
    CHECK(std::fabs(v.imag() - 0.5 * 1.0) < 1e-10);

    // oscillatory-but-smooth integrand, adaptive path engaged
    auto osc = [](double x, double y) { return std::cos(8.0 * x) * std::exp(-y) * y * y; };
    double c1 = region_integral_real(b2, osc, spec);
    double exact = (std::sin(8.0) / 8.0) * (std::exp(-1.0) - std::exp(-2.0));
    CHECK(rel(c1, exact) < 1e-9);
}

TEST_CASE("region integrator failure modes") {
    QuadSpec spec;
    spec.tol = 1e-13;
    spec.max_refine = 3;
    Region b = make_region(0.0, 1.0, 1.0, 2.0, false);
    auto step = [](double x, double) { return x > 0.29671 ? 1.0 : 0.0; };
    CHECK_THROWS_AS(region_integral_real(b, step, spec), NumericError);

    Region inf_top = make_region(0.0, 1.0, 1.0, std::numeric_limits<double>::infinity(), false);
    CHECK_THROWS_AS(region_integral_real(inf_top, [](double, double) { return 0.0; }, QuadSpec{}),
                    DomainError);
}
