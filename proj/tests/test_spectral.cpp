#include <cmath>
#include <complex>

#include "doctest.h"
#include "pklab/domain.hpp"
#include "pklab/errors.hpp"
#include "pklab/poincare.hpp"
#include "pklab/special.hpp"
#include "pklab/spectral.hpp"

using namespace pklab;

namespace {

double rel(double a, double b) { return std::fabs(a - b) / std::max(1e-300, std::fabs(b)); }

std::complex<double> E(double t, double x, double y, double tol = 1e-10) {
    return eisenstein_eval(EisensteinSpec(t, tol), ModularPoint{x, y});
}

double entry_value(const CoefficientEntry& e) {
    return (e.value.sign < 0 ? -1.0 : 1.0) * std::exp(e.value.log_mag);
}

}  // namespace

TEST_CASE("eisenstein series: basic structure") {
    // periodicity is exact after x-reduction
    std::complex<double> a = E(1.0, 0.31, 1.4);
    std::complex<double> b = E(1.0, 1.31, 1.4);
    CHECK(std::abs(a - b) < 1e-12 * std::abs(a));

    // even in x, conjugate in t
    CHECK(std::abs(E(1.0, -0.31, 1.4) - a) < 1e-14 * std::abs(a));
    std::complex<double> c = E(-1.0, 0.31, 1.4);
    CHECK(std::abs(c - std::conj(a)) < 1e-14 * std::abs(a));

    // guards
    CHECK_THROWS_AS(EisensteinSpec(0.0), DomainError);
    CHECK_THROWS_AS(EisensteinSpec(1e-4), DomainError);
    CHECK_THROWS_AS(EisensteinSpec(101.0), DomainError);
    CHECK_THROWS_AS(E(1.0, 0.0, 0.45), DomainError);
}

TEST_CASE("eisenstein series: modular invariance under the inversion") {
    // the normalization of the cusp expansion is pinned by E(-1/z) = E(z);
    // any misweighted constant would show up here at O(1)
    double t = 1.0;
    std::complex<double> z(0.2, 1.3);
    std::complex<double> w = -1.0 / z;
    std::complex<double> lhs = E(t, w.real(), w.imag(), 1e-11);
    std::complex<double> rhs = E(t, z.real(), z.imag(), 1e-11);
    CHECK(std::abs(lhs - rhs) < 1e-6 * std::abs(rhs));

    // a second point and a second t
    std::complex<double> z2(-0.37, 0.93);
    std::complex<double> w2 = -1.0 / z2;
    std::complex<double> l2 = E(2.5, w2.real(), w2.imag(), 1e-11);
    std::complex<double> r2 = E(2.5, z2.real(), z2.imag(), 1e-11);
    CHECK(std::abs(l2 - r2) < 1e-6 * std::abs(r2));
}

TEST_CASE("eisenstein series: laplacian eigenfunction by finite differences") {
    double t = 1.7, x = 0.13, y = 1.22, h = 1e-3;
    auto ev = [&](double dx, double dy) { return E(t, x + dx, y + dy, 1e-12); };
    std::complex<double> e0 = ev(0, 0);
    std::complex<double> exx = (ev(h, 0) - 2.0 * e0 + ev(-h, 0)) / (h * h);
    std::complex<double> eyy = (ev(0, h) - 2.0 * e0 + ev(0, -h)) / (h * h);
    std::complex<double> resid = y * y * (exx + eyy) + (0.25 + t * t) * e0;
    CHECK(std::abs(resid) < 1e-3 * (0.25 + t * t) * std::abs(e0));
}

TEST_CASE("eisenstein series: degeneration toward t = 0") {
    // E(z, 1/2) vanishes identically (the scattering phase passes through -1),
    // so near t = 0 the series is ~ i t G(z): the two boundary evaluations are
    // conjugates, tiny, and share their real part up to O(t^2)
    std::complex<double> ep = E(1e-3, 0.2, 1.3);
    std::complex<double> em = E(-1e-3, 0.2, 1.3);
    CHECK(std::abs(ep - std::conj(em)) < 1e-12);
    CHECK(std::abs(ep) < 1e-2);
    CHECK(std::fabs(ep.real() - em.real()) < 1e-12);
    CHECK(std::fabs(ep.real()) < 1e-4);  // even part is O(t^2)
}

TEST_CASE("weighted density integral: odd test functions vanish") {
    ModularParams p(20, 1);
    long N = suggest_table_length(p, std::sqrt(3.0) / 2.0, 1e-10);
    CoefficientTable t = build_table(p, N, 1e-10);

    QuadSpec q;
    q.tol = 1e-8;
    // |P~|^2 is even in x, so any odd g integrates to zero; this is the
    // symmetry that kills the odd part of the spectral expansion
    auto odd = [](double x, double y) {
        return std::complex<double>(std::sin(2.0 * M_PI * x) * std::exp(-y), 0.0);
    };
    std::complex<double> v = weighted_density_integral(t, odd, q, 1.0);
    CHECK(std::abs(v) < 1e-10);

    // the constant weight recovers the unit mass
    auto one = [](double, double) { return std::complex<double>(1.0, 0.0); };
    std::complex<double> mass = weighted_density_integral(t, one, q, 1.0);
    CHECK(std::fabs(mass.real() - 1.0) < 1e-6);
    CHECK(std::fabs(mass.imag()) < 1e-12);

    CHECK_THROWS_AS(weighted_density_integral(t, one, q, 0.0), DomainError);
}

TEST_CASE("unfolded inner product: constant-term reduction hits the gamma closed form") {
    ModularParams p(24, 2);
    CoefficientTable t = build_table(p, 4, 1e-10);
    EisensteinSpec es(1.0, 1e-9);

    LogComplex got_log = inner_product_unfolded(t, es, true);
    std::complex<double> got = got_log.to_complex();

    // p(m) [ Gamma(k-1/2+it)/(4 pi m)^{k-1/2+it} + phi_t Gamma(k-1/2-it)/(4 pi m)^{k-1/2-it} ]
    double L = std::log(4.0 * M_PI * p.m);
    std::complex<double> s_plus(p.k - 0.5, es.t);
    std::complex<double> A = std::exp(log_gamma_complex(s_plus) - s_plus * L);
    LogComplex lam = xi({1.0, 2.0 * es.t});
    std::complex<double> phi_t = std::polar(1.0, -2.0 * lam.phase);
    std::complex<double> expect = entry_value(t.at(p.m)) * (A + phi_t * std::conj(A));
    CHECK(std::abs(got - expect) < 1e-8 * std::abs(expect));
}

TEST_CASE("direct and unfolded inner products agree") {
    ModularParams p(24, 2);
    EisensteinSpec es(1.0, 1e-6);
    long N = unfolded_table_length(p, es.t, es.tol);
    REQUIRE(N >= p.m + 2);
    // the direct quadrature also evaluates P across the fundamental domain
    N = std::max(N, suggest_table_length(p, std::sqrt(3.0) / 2.0, 1e-10));
    CoefficientTable t = build_table(p, N, 1e-10);

    QuadSpec q;
    q.tol = 1e-6;
    std::complex<double> direct = inner_product_direct(t, EisensteinSpec(1.0, 1e-8), q);

    LogComplex unf = inner_product_unfolded(t, es);
    SignedLogReal norm = petersson_norm_log(t);
    std::complex<double> unf_normalized =
        std::exp(unf.log_mag - norm.log_mag) * std::polar(1.0, unf.phase);

    CHECK(std::abs(direct - unf_normalized) < 1e-4 * std::abs(unf_normalized));

    // t-conjugation of the direct quadrature
    std::complex<double> direct_m = inner_product_direct(t, EisensteinSpec(-1.0, 1e-8), q);
    CHECK(std::abs(direct_m - std::conj(direct)) < 1e-6 * std::abs(direct));
}

TEST_CASE("unfolded inner product: guards") {
    ModularParams p(16, 3);
    CoefficientTable t = build_table(p, 3, 1e-10);  // no room past n = m
    EisensteinSpec es(1.0, 1e-6);
    CHECK_THROWS_AS(inner_product_unfolded(t, es), TableTooShortError);
    CHECK(rel(1.0, 1.0) == 0.0);
}
