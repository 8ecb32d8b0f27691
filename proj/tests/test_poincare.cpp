#include <cmath>
#include <complex>
#include <limits>

#include "doctest.h"
#include "pklab/config.hpp"
#include "pklab/errors.hpp"
#include "pklab/poincare.hpp"

using namespace pklab;

namespace {

double rel(double a, double b) { return std::fabs(a - b) / std::max(std::fabs(b), 1e-300); }

double entry_value(const CoefficientEntry& e) {
    return e.value.sign * std::exp(e.value.log_mag);
}

}  // namespace

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(ModularParams(13, 1), DomainError);  // odd
    CHECK_THROWS_AS(ModularParams(2, 1), DomainError);   // too small
    CHECK_THROWS_AS(ModularParams(12, 0), DomainError);  // m = 0 excluded
    ModularParams p(14, 3);
    CHECK(p.nu == 13);
}

TEST_CASE("q_cut formula") {
    CHECK(rel(q_cut(ModularParams(14, 1), 1), 4.0 * M_PI / 13.0) < 1e-15);
    CHECK(rel(q_cut(ModularParams(200, 2000), 2000), 4.0 * M_PI * 2000.0 / 199.0) < 1e-15);
    ModularParams p(20, 3);
    double prev = 0.0;
    for (long n = 1; n <= 50; ++n) {
        double q = q_cut(p, n);
        CHECK(q > prev);
        prev = q;
    }
    CHECK_THROWS_AS(q_cut(p, 0), DomainError);
}

TEST_CASE("coefficient basics and certification") {
    ModularParams p(12, 1);
    CoefficientEntry e = coefficient(p, 1, 1e-10);
    CHECK(e.ok());
    CHECK(e.value.sign != 0);
    // tail is certified relative to the value
    CHECK(e.tail_bound <= 1e-10 * std::max(std::exp(e.value.log_mag), 1e-300) * (1.0 + 1e-9));
    // truncation point respects the q_cut floor
    CHECK(e.c_truncation >= static_cast<long>(std::ceil(2.0 * q_cut(p, 1))));

    // tol validation
    CHECK_THROWS_AS(coefficient(p, 1, 0.0), DomainError);
    CHECK_THROWS_AS(coefficient(p, 1, -1e-9), DomainError);
    CHECK_THROWS_AS(coefficient(p, 1, 1e-3), DomainError);
    CHECK_THROWS_AS(coefficient(p, 1, 1e-20), PrecisionError);
    CHECK_THROWS_AS(coefficient(p, 0, 1e-10), DomainError);

    // tightening tol only sharpens the result
    CoefficientEntry e2 = coefficient(p, 1, 1e-12);
    CHECK(e2.c_truncation >= e.c_truncation);
    CHECK(rel(entry_value(e2), entry_value(e)) < 1e-9);
}

TEST_CASE("sign flip under k -> k+2 of the leading factor") {
    // i^k = +1 for k = 0 mod 4, -1 for k = 2 mod 4; for n far from m the delta
    // term is absent and p is 2 pi i^k (n/m)^{nu/2} S with S continuous-ish in k,
    // so we just test the documented sign convention on a case with |S| bounded
    // away from zero on both weights.
    CoefficientEntry a = coefficient(ModularParams(12, 1), 2, 1e-10);
    CoefficientEntry b = coefficient(ModularParams(16, 1), 2, 1e-10);
    CHECK(a.value.sign != 0);
    CHECK(b.value.sign != 0);
    // tau(2) = -24 for weight 12; weight 16 cusp form has a_2 = 216 > 0 -- but
    // avoid memorized constants: only check the two paths agree per weight below.
    SUBCASE("oracle cross-check of both weights at n=2") {
        std::complex<double> oa = coefficient_oracle(ModularParams(12, 1), 2, 1.0, 60, 32);
        std::complex<double> ob = coefficient_oracle(ModularParams(16, 1), 2, 1.0, 60, 32);
        CHECK(rel(oa.real(), entry_value(a)) < 1e-8);
        CHECK(rel(ob.real(), entry_value(b)) < 1e-8);
        CHECK(std::fabs(oa.imag()) < 1e-10 * std::fabs(oa.real()));
        CHECK(std::fabs(ob.imag()) < 1e-10 * std::fabs(ob.real()));
    }
}

TEST_CASE("kloosterman path vs lattice oracle, spot grid") {
    // the pinned example: k=20, m=1, n=1..10 at y=1, grid=64, lattice_cut=200
    ModularParams p(20, 1);
    for (long n = 1; n <= 10; ++n) {
        CoefficientEntry e = coefficient(p, n, 1e-10);
        std::complex<double> o = coefficient_oracle(p, n, 1.0, 200, 64);
        double tol = std::max(1e-8, 10.0 * e.tail_bound / std::fabs(entry_value(e)));
        CHECK(rel(o.real(), entry_value(e)) < tol);
    }
}

TEST_CASE("oracle aliasing and domain guards") {
    ModularParams p(20, 1);
    CHECK_THROWS_AS(coefficient_oracle(p, 16, 1.0, 40, 32), AliasingError);
    CHECK_THROWS_AS(coefficient_oracle(p, 1, 0.5, 40, 32), DomainError);
    CHECK_THROWS_AS(coefficient_oracle(p, 0, 1.0, 40, 32), DomainError);
}

TEST_CASE("ramanujan tau ratios are integers along both routes") {
    // dim S_12 = 1 forces P_{12,1} proportional to Delta, so p(n)/p(1) must be
    // the integer tau(n).  Expected values expanded by hand from the eta
    // product q prod (1-q^n)^24.  tau(10) ~ 1e5, so the ratio conditioning
    // needs p(1) at relative 1e-12 for a 1e-6 integrality margin.
    static const double kTau[11] = {0,    1,      -24,    252,    -1472,  4830,
                                    -6048, -16744, 84480, -113643, -115920};
    ModularParams p(12, 1);
    CoefficientTable t = build_table(p, 10, 1e-12);
    CHECK_FALSE(t.partial);
    double p1 = entry_value(t.at(1));
    CHECK(p1 != 0.0);
    for (long n = 2; n <= 10; ++n) {
        double ratio = entry_value(t.at(n)) / p1;
        CHECK(std::fabs(ratio - kTau[n]) < 1e-6 * std::fabs(kTau[n]));
    }
    // lattice route, independently; the DFT bin error is amplified by
    // e^{2 pi n y} against a lattice tail ~ cut^{2-k}, so at k = 12 the unit
    // test stops at n = 6, where cut = 72 at y = 0.8 certifies 1e-6 ratios
    // (the acceptance suite carries n <= 10 with the heavy cut)
    double o1 = coefficient_oracle(p, 1, 0.8, 72, 16).real();
    for (long n = 2; n <= 6; ++n) {
        double ratio = coefficient_oracle(p, n, 0.8, 72, 16).real() / o1;
        CHECK(std::fabs(ratio - std::round(ratio)) < 1e-6);
        double kl = entry_value(t.at(n)) / p1;
        CHECK(std::round(ratio) == std::round(kl));
    }
}

TEST_CASE("table construction") {
    ModularParams p(16, 2);
    CoefficientTable t = build_table(p, 12, 1e-10);
    CHECK(t.size() == 12);
    CHECK(t.covers(2));
    CHECK(t.covers(12));
    CHECK_FALSE(t.covers(13));
    CHECK_FALSE(t.norm_entry.has_value());
    CHECK_THROWS_AS(t.at(13), DomainError);
    CHECK_THROWS_AS(build_table(p, 0, 1e-10), DomainError);

    // N = 1 table
    CoefficientTable t1 = build_table(ModularParams(12, 1), 1, 1e-10);
    CHECK(t1.size() == 1);

    // m beyond the dense range gets the extra norm entry
    CoefficientTable taux = build_table(ModularParams(16, 9), 4, 1e-10);
    CHECK(taux.norm_entry.has_value());
    CHECK(taux.covers(9));
    CHECK_FALSE(taux.covers(8));
    CHECK(taux.at(9).ok());

    // determinism: rebuilding yields bit-identical entries
    CoefficientTable u = build_table(p, 12, 1e-10);
    for (long n = 1; n <= 12; ++n) {
        CHECK(u.at(n).value.log_mag == t.at(n).value.log_mag);
        CHECK(u.at(n).value.sign == t.at(n).value.sign);
        CHECK(u.at(n).tail_bound == t.at(n).tail_bound);
        CHECK(u.at(n).c_truncation == t.at(n).c_truncation);
    }
}

TEST_CASE("build_table determinism across thread counts") {
    Config saved = config();
    ModularParams p(20, 3);
    Config c1 = saved;
    c1.threads = 1;
    set_config(c1);
    CoefficientTable t1 = build_table(p, 16, 1e-10);
    Config c8 = saved;
    c8.threads = 8;
    set_config(c8);
    CoefficientTable t8 = build_table(p, 16, 1e-10);
    set_config(saved);
    for (long n = 1; n <= 16; ++n) {
        CHECK(t1.at(n).value.log_mag == t8.at(n).value.log_mag);
        CHECK(t1.at(n).value.sign == t8.at(n).value.sign);
    }
}

TEST_CASE("series evaluation: periodicity, conjugation, domain") {
    ModularParams p(20, 2);
    long N = suggest_table_length(p, 0.9, 1e-10);
    CoefficientTable t = build_table(p, N, 1e-10);

    // dyadic x: the shift by one is exact after reduction, results bitwise equal
    ModularPoint zd{0.3125, 1.05};
    LogComplex ad = evaluate(t, zd);
    LogComplex bd = evaluate(t, ModularPoint{zd.x + 1.0, zd.y});
    CHECK(ad.log_mag == bd.log_mag);
    CHECK(ad.phase == bd.phase);

    // generic x: only the rounding of x+1 itself separates the two
    ModularPoint z{0.137, 1.05};
    std::complex<double> va = evaluate(t, z).to_complex();
    std::complex<double> vb = evaluate(t, ModularPoint{z.x + 1.0, z.y}).to_complex();
    CHECK(std::abs(va - vb) < 1e-14 * std::abs(va));

    LogComplex c = evaluate(t, ModularPoint{-z.x, z.y});
    std::complex<double> vc = c.to_complex();
    CHECK(std::abs(vc - std::conj(va)) < 1e-12 * std::abs(va));

    // table ending before the tail criterion trips
    CoefficientTable shorty = build_table(p, 3, 1e-10);
    CHECK_THROWS_AS(evaluate(shorty, z), TableTooShortError);
    CHECK_THROWS_AS(evaluate(t, ModularPoint{0.0, 0.4}), DomainError);
}

TEST_CASE("two evaluators agree and transform modularly") {
    ModularParams p(20, 2);
    long N = suggest_table_length(p, 0.9, 1e-10);
    CoefficientTable t = build_table(p, N, 1e-10);

    ModularPoint z{0.3, 1.1};
    LogComplex series = evaluate(t, z);
    LogComplex lattice = evaluate_lattice(p, z, 120);
    std::complex<double> vs = series.to_complex();
    std::complex<double> vl = lattice.to_complex();
    CHECK(std::abs(vs - vl) < 1e-8 * std::abs(vl));

    // |P(-1/z)| = |z|^k |P(z)|: image of 0.3+1.1i under inversion has y' = y/|z|^2 < 0.9,
    // so evaluate the image with the lattice sum (valid for y >= 0.8)
    double az2 = z.x * z.x + z.y * z.y;
    ModularPoint w{-z.x / az2, z.y / az2};
    CHECK(w.y >= 0.8);
    LogComplex inv = evaluate_lattice(p, w, 120);
    double lhs = inv.log_mag;
    double rhs = static_cast<double>(p.k) * 0.5 * std::log(az2) + lattice.log_mag;
    CHECK(std::fabs(lhs - rhs) < 1e-8);

    // doubling the cut moves the value by < 1e-10 relative
    LogComplex l2 = evaluate_lattice(p, z, 240);
    CHECK(std::abs(l2.to_complex() - vl) < 1e-10 * std::abs(vl));

    // with cut < y no c >= 1 pair fits in the window, leaving exactly the
    // identity-coset term e(mz) -- one copy, not half or two
    ModularPoint high{0.21, 3.0};
    LogComplex lat_high = evaluate_lattice(p, high, 2);
    std::complex<double> e_mz =
        std::exp(std::complex<double>(-2.0 * M_PI * p.m * high.y, 2.0 * M_PI * p.m * high.x));
    CHECK(std::abs(lat_high.to_complex() - e_mz) < 1e-13 * std::abs(e_mz));
}

TEST_CASE("petersson norm") {
    // k=12, m=1: norm = Gamma(11)/(4 pi)^11 p(1), p(1) > 0
    CoefficientTable t = build_table(ModularParams(12, 1), 1, 1e-10);
    SignedLogReal norm = petersson_norm_log(t);
    CHECK(norm.sign == +1);
    double expect = std::lgamma(11.0) - 11.0 * std::log(4.0 * M_PI) +
                    std::log(entry_value(t.at(1)));
    CHECK(std::fabs(norm.log_mag - expect) < 1e-12);

    // norm requires coverage of n = m
    CoefficientTable t2 = build_table(ModularParams(16, 9), 4, 1e-10);
    CHECK_NOTHROW(petersson_norm_log(t2));  // via the aux entry
    // a table built directly without coverage must refuse
    CoefficientTable bare{ModularParams(16, 9), {}, std::nullopt, 1e-10, false};
    bare.entries.resize(4);
    CHECK_THROWS_AS(petersson_norm_log(bare), DomainError);

    // m <= ((k-1)/4pi)^2 regime: p(m) ~ 1, so |log p| is small
    ModularParams big(120, 60);
    CoefficientTable tb = build_table(big, 1, 1e-10);
    // dense range misses m = 60: aux entry must have been created
    REQUIRE(tb.covers(60));
    SignedLogReal nb = petersson_norm_log(tb);
    double main_term = std::lgamma(119.0) - 119.0 * std::log(4.0 * M_PI * 60.0);
    CHECK(std::fabs(nb.log_mag - main_term) < 0.7);
}

TEST_CASE("valence at infinity is one for small m") {
    // first n with |p(n)| certified above its tail is n = 1
    for (auto [k, m] : {std::pair<long, long>{12, 1}, {20, 1}, {40, 5}}) {
        CoefficientTable t = build_table(ModularParams(k, m), 4, 1e-10);
        long v_inf = 0;
        for (long n = 1; n <= t.size(); ++n) {
            const CoefficientEntry& e = t.at(n);
            if (e.value.sign != 0 && std::exp(e.value.log_mag) > e.tail_bound) {
                v_inf = n;
                break;
            }
        }
        CHECK(v_inf == 1);
    }
}

TEST_CASE("mass density and normalization") {
    ModularParams p(20, 1);
    long N = suggest_table_length(p, std::sqrt(3.0) / 2.0, 1e-10);
    CoefficientTable t = build_table(p, N, 1e-10);

    // density is nonnegative wherever sampled
    for (double x : {-0.4, -0.1, 0.0, 0.2, 0.45}) {
        for (double y : {0.95, 1.3, 2.7}) {
            if (!ModularPoint{x, y}.in_fundamental_domain()) continue;
            CHECK(mass_density(t, ModularPoint{x, y}) >= 0.0);
        }
    }

    // tail bound is a decreasing function of the cut height
    double tb1 = mass_tail_bound(t, 3.0);
    double tb2 = mass_tail_bound(t, 4.0);
    CHECK(tb2 < tb1);
    CHECK(tb1 < 0.1);

    // total mass over F is 1
    QuadSpec spec;
    spec.tol = 1e-8;
    Region F = fundamental_domain(std::numeric_limits<double>::infinity());
    double mass = mass_integral(t, F, spec);
    CHECK(std::fabs(mass - 1.0) < 1e-6);

    // region outside F is refused
    Region bad = make_region(-0.5, 0.5, 0.4, 2.0, false);
    CHECK_THROWS_AS(mass_integral(t, bad, spec), DomainError);
}

TEST_CASE("suggest_table_length covers evaluation") {
    ModularParams p(24, 3);
    long N = suggest_table_length(p, 0.85, 1e-10);
    CHECK(N >= 25);
    CoefficientTable t = build_table(p, N, 1e-10);
    CHECK_NOTHROW(evaluate(t, ModularPoint{0.31, 0.85}));
    CHECK_NOTHROW(evaluate(t, ModularPoint{0.0, 5.0}));
    CHECK_THROWS_AS(suggest_table_length(p, 0.0, 1e-10), DomainError);
}

TEST_CASE("smooth majorant dominates the coefficient bound") {
    // the concave envelope must sit above the kinked certified bound for
    // every n; at n == m the Kronecker delta is the caller's to add
    for (auto [k, m] : std::vector<std::pair<long, long>>{{16, 1}, {24, 2}, {60, 245}, {180, 934}}) {
        ModularParams p(k, m);
        CoeffMajorant env = coeff_majorant(p);
        long hi = std::max<long>(4 * m, 2000);
        for (long n = 1; n <= hi; n = n + 1 + n / 7) {
            double covered = n == m ? log_add_exp(0.0, env(static_cast<double>(n)))
                                    : env(static_cast<double>(n));
            CHECK(covered >= coeff_bound_log(p, n) - 1e-12);
        }
        // concavity of the per-term log (second differences non-positive)
        for (long n = 2; n <= 4000; n = n + 1 + n / 5) {
            double d2 = env(static_cast<double>(n + 1)) - 2.0 * env(static_cast<double>(n)) +
                        env(static_cast<double>(n - 1));
            CHECK(d2 <= 1e-12);
        }
    }
}
