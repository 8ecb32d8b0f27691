#include "pklab/poincare.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>

#include "pklab/arith.hpp"
#include "pklab/config.hpp"
#include "pklab/errors.hpp"
#include "pklab/parallel.hpp"
#include "pklab/special.hpp"

namespace pklab {

namespace {

// The Kloosterman values and Bessel log-magnitudes travel through double, so
// no precision_bits setting can push the relative accuracy of a coefficient
// much below this.
constexpr double kCoeffTolFloor = 1e-13;
constexpr long kCModulusCap = 1000000;

void validate_tol(double tol) {
    if (!(tol > 0.0) || tol > 1e-4) throw DomainError("coefficient: tol must lie in (0, 1e-4]");
    if (tol < kCoeffTolFloor)
        throw PrecisionError(
            "coefficient: requested tol is below the double-channel noise floor of the "
            "Kloosterman/Bessel factors (~1e-13); raising precision_bits cannot reach it");
}

// log of the certified c-sum tail after summing moduli 1..C:
// sum_{c>C} |K/c| |J_nu(4 pi sqrt(mn)/c)| <= nu^{-1/2} (eQ/(2C))^nu C/(nu-2)
double log_tail_raw(long nu, double Q, double C) {
    return -0.5 * std::log(static_cast<double>(nu)) +
           static_cast<double>(nu) * (1.0 + std::log(Q / 2.0) - std::log(C)) + std::log(C) -
           std::log(static_cast<double>(nu - 2));
}

}  // namespace

ModularParams::ModularParams(long k_, long m_) : k(k_), m(m_), nu(k_ - 1) {
    if (k < 4 || k % 2 != 0) throw DomainError("ModularParams: k must be even and >= 4");
    if (m < 1) throw DomainError("ModularParams: m must be >= 1 (cusp form range)");
}

bool CoefficientTable::covers(long n) const {
    return (n >= 1 && n <= size()) || (n == params.m && norm_entry.has_value());
}

const CoefficientEntry& CoefficientTable::at(long n) const {
    if (n >= 1 && n <= size()) return entries[static_cast<size_t>(n - 1)];
    if (n == params.m && norm_entry) return *norm_entry;
    throw DomainError("CoefficientTable: index outside the computed range");
}

double q_cut(const ModularParams& params, long n) {
    if (n < 1) throw DomainError("q_cut: n must be >= 1");
    return 4.0 * M_PI * std::sqrt(static_cast<double>(params.m) * static_cast<double>(n)) /
           static_cast<double>(params.nu);
}

CoefficientEntry coefficient(const ModularParams& params, long n, double tol) {
    if (n < 1) throw DomainError("coefficient: n must be >= 1");
    validate_tol(tol);

    const long nu = params.nu;
    const double Q = q_cut(params, n);
    const mpfr_prec_t prec = config().precision_bits;
    const int sign_ik = (params.k % 4 == 0) ? +1 : -1;  // i^k for even k

    // 2 pi (n/m)^{nu/2}, kept in extended precision like everything that can
    // leave the double exponent range
    BigFloat pref(prec);
    {
        BigFloat ln_ratio = log(BigFloat(n, prec)) - log(BigFloat(params.m, prec));
        BigFloat e = exp(BigFloat(0.5 * static_cast<double>(nu), prec) * ln_ratio);
        BigFloat two_pi = BigFloat(2.0, prec) * BigFloat::pi(prec);
        pref = two_pi * e;
    }
    const double log_pref = std::log(2.0 * M_PI) +
                            0.5 * static_cast<double>(nu) *
                                (std::log(static_cast<double>(n)) - std::log(static_cast<double>(params.m)));

    BigFloat mn(prec);
    mpfr_set_si(mn.raw(), params.m, MPFR_RNDN);
    mpfr_mul_si(mn.raw(), mn.raw(), n, MPFR_RNDN);
    BigFloat four_pi_sqrt_mn = BigFloat(4.0, prec) * BigFloat::pi(prec) * sqrt(mn);

    const long c_min = std::max<long>(1, static_cast<long>(std::ceil(2.0 * Q)));
    BigFloat S(0.0, prec);
    double best_tail_log = std::numeric_limits<double>::infinity();
    long c_stop = 0;
    double tail_p = 0.0;

    for (long c = 1;; ++c) {
        if (c > kCModulusCap)
            throw TruncationError(
                "coefficient: c-sum did not certify the requested tolerance before the modulus cap",
                best_tail_log);
        KloostermanModulus km(c);
        double kv = km.sum(params.m, n);
        if (kv != 0.0) {
            BigFloat arg(prec);
            mpfr_div_si(arg.raw(), four_pi_sqrt_mn.raw(), c, MPFR_RNDN);
            SignedLogReal J = bessel_j_log(nu, arg);
            if (J.sign != 0) {
                BigFloat term = exp(BigFloat(J.log_mag, prec));
                mpfr_mul_d(term.raw(), term.raw(), kv * static_cast<double>(J.sign), MPFR_RNDN);
                mpfr_div_si(term.raw(), term.raw(), c, MPFR_RNDN);
                S += term;
            }
        }
        if (c < c_min) continue;

        double ltp = log_pref + log_tail_raw(nu, Q, static_cast<double>(c));
        best_tail_log = std::min(best_tail_log, ltp);
        // current value including the delta term, in extended precision
        BigFloat p = pref * S;
        if (sign_ik < 0) mpfr_neg(p.raw(), p.raw(), MPFR_RNDN);
        if (n == params.m) mpfr_add_ui(p.raw(), p.raw(), 1, MPFR_RNDN);
        double scale_log = std::max(p.log_abs(), std::log(1e-300));
        if (ltp <= std::log(tol) + scale_log) {
            c_stop = c;
            tail_p = std::exp(ltp);
            CoefficientEntry e;
            e.value = SignedLogReal::from_log(p.sign(), p.log_abs());
            e.tail_bound = tail_p;
            e.c_truncation = c_stop;
            return e;
        }
    }
}

SmnSplit smn_split(const ModularParams& params, long n, double tol) {
    if (n < 1) throw DomainError("smn_split: n must be >= 1");
    validate_tol(tol);

    const long nu = params.nu;
    const double Q = q_cut(params, n);
    const mpfr_prec_t prec = config().precision_bits;

    BigFloat mn(prec);
    mpfr_set_si(mn.raw(), params.m, MPFR_RNDN);
    mpfr_mul_si(mn.raw(), mn.raw(), n, MPFR_RNDN);
    BigFloat four_pi_sqrt_mn = BigFloat(4.0, prec) * BigFloat::pi(prec) * sqrt(mn);

    // same summation core as coefficient(), with the accumulator split at Q;
    // Q is irrational so no modulus sits on the boundary
    const long c_min = std::max<long>(1, static_cast<long>(std::ceil(2.0 * Q)));
    BigFloat s_low(0.0, prec);
    BigFloat s_high(0.0, prec);
    double best_tail_log = std::numeric_limits<double>::infinity();

    for (long c = 1;; ++c) {
        if (c > kCModulusCap)
            throw TruncationError(
                "smn_split: c-sum did not certify the requested tolerance before the modulus cap",
                best_tail_log);
        KloostermanModulus km(c);
        double kv = km.sum(params.m, n);
        if (kv != 0.0) {
            BigFloat arg(prec);
            mpfr_div_si(arg.raw(), four_pi_sqrt_mn.raw(), c, MPFR_RNDN);
            SignedLogReal J = bessel_j_log(nu, arg);
            if (J.sign != 0) {
                BigFloat term = exp(BigFloat(J.log_mag, prec));
                mpfr_mul_d(term.raw(), term.raw(), kv * static_cast<double>(J.sign), MPFR_RNDN);
                mpfr_div_si(term.raw(), term.raw(), c, MPFR_RNDN);
                if (static_cast<double>(c) <= Q) {
                    s_low += term;
                } else {
                    s_high += term;
                }
            }
        }
        if (c < c_min) continue;

        // absolute remainder on the S-scale: the comparison targets are O(1)
        double lt = log_tail_raw(nu, Q, static_cast<double>(c));
        best_tail_log = std::min(best_tail_log, lt);
        if (lt <= std::log(tol)) {
            SmnSplit out;
            out.low = SignedLogReal::from_log(s_low.sign(), s_low.log_abs());
            out.high = SignedLogReal::from_log(s_high.sign(), s_high.log_abs());
            out.tail_bound = std::exp(lt);
            out.q = Q;
            return out;
        }
    }
}

// ---------------------------------------------------------------------------
// lattice route: truncated sum over coprime (c,d) with c >= 1 and
// |c z + d| <= cut, plus the c = 0 coset e(mz).  The disk window is covariant
// under x -> x+1 (d shifts by -c, w unchanged), so the truncated sum keeps the
// exact periodicity the Fourier extraction relies on, and its tail is
// O(cut^{2-k}/y) by lattice-point counting on |w| > cut.

namespace {

// per-modulus unit inverses and roots of unity e(j/c), amortized across grid points
struct LatticeTables {
    long cut = 0;
    double w_split = 0.0;  // |w| below this goes through the extended-precision path
    std::vector<std::vector<long>> inv;            // inv[c][r] = r^{-1} mod c, -1 if not a unit
    std::vector<std::vector<BigComplex>> roots;    // roots[c][j] = e(j/c), near-zone moduli only
    std::vector<std::vector<std::complex<double>>> droots;  // all moduli, double precision
};

// Terms with |w| >= w_split have magnitude <= w_split^{-k}; double arithmetic
// then keeps the summed rounding error a factor ~10 below the lattice tail
// that the cut itself leaves behind, so the far zone can skip MPFR entirely.
double lattice_split_radius(long k, long cut) {
    double frac = std::pow(1e-14 * static_cast<double>(k), 1.0 / static_cast<double>(k - 2));
    return std::min(static_cast<double>(cut), std::max(8.0, static_cast<double>(cut) * frac));
}

LatticeTables build_lattice_tables(const ModularParams& params, long cut, mpfr_prec_t prec) {
    LatticeTables t;
    t.cut = cut;
    t.w_split = lattice_split_radius(params.k, cut);
    t.inv.resize(static_cast<size_t>(cut) + 1);
    t.roots.resize(static_cast<size_t>(cut) + 1);
    t.droots.resize(static_cast<size_t>(cut) + 1);
    // near-zone moduli: c*y <= |w| < w_split and y >= 0.8
    const long c_near = std::min(cut, static_cast<long>(std::ceil(t.w_split / 0.8)) + 1);
    BigFloat two_pi = BigFloat(2.0, prec) * BigFloat::pi(prec);
    for (long c = 1; c <= cut; ++c) {
        auto& ic = t.inv[static_cast<size_t>(c)];
        ic.assign(static_cast<size_t>(c), -1);
        for (long r = 0; r < c; ++r)
            if (std::gcd(r, c) == 1) ic[static_cast<size_t>(r)] = static_cast<long>(inverse_mod(r, c));
        auto& dc = t.droots[static_cast<size_t>(c)];
        dc.reserve(static_cast<size_t>(c));
        for (long j = 0; j < c; ++j) {
            double ang = 2.0 * M_PI * static_cast<double>(j) / static_cast<double>(c);
            dc.emplace_back(std::cos(ang), std::sin(ang));
        }
        if (c <= c_near) {
            auto& rc = t.roots[static_cast<size_t>(c)];
            rc.reserve(static_cast<size_t>(c));
            for (long j = 0; j < c; ++j) {
                BigFloat ang(j, prec);
                mpfr_div_si(ang.raw(), ang.raw(), c, MPFR_RNDN);
                rc.push_back(BigComplex::cis(two_pi * ang));
            }
        }
    }
    return t;
}

std::complex<double> cpow_int(std::complex<double> z, unsigned long n) {
    std::complex<double> r(1.0, 0.0);
    while (n) {
        if (n & 1) r *= z;
        z *= z;
        n >>= 1;
    }
    return r;
}

BigComplex lattice_point(const ModularParams& params, const BigFloat& bx, const BigFloat& by,
                         const LatticeTables& tab, mpfr_prec_t prec) {
    const long cut = tab.cut;
    const BigFloat two_pi = BigFloat(2.0, prec) * BigFloat::pi(prec);
    const BigFloat two_pi_m = two_pi * BigFloat(params.m, prec);
    const double x = bx.to_double();
    const double y = by.to_double();
    const double cut2 = static_cast<double>(cut) * static_cast<double>(cut);
    const double split2 = tab.w_split * tab.w_split;
    const double tpm = 2.0 * M_PI * static_cast<double>(params.m);

    // c = 0, d = +-1 collapse to one coset contributing e(mz)
    BigComplex acc = BigComplex::exp_complex(-(two_pi_m * by), two_pi_m * bx);

    for (long c = 1; c <= cut; ++c) {
        const double cy = static_cast<double>(c) * y;
        const double cy2 = cy * cy;
        if (cy2 > cut2) break;
        const double halfw = std::sqrt(cut2 - cy2);
        const auto& ic = tab.inv[static_cast<size_t>(c)];
        const auto& dc = tab.droots[static_cast<size_t>(c)];
        BigFloat cbx = BigFloat(c, prec) * bx;
        BigFloat cby = BigFloat(c, prec) * by;
        BigFloat cby2 = cby * cby;
        long dlo = static_cast<long>(std::ceil(-static_cast<double>(c) * x - halfw)) - 1;
        long dhi = static_cast<long>(std::floor(-static_cast<double>(c) * x + halfw)) + 1;
        std::complex<double> row(0.0, 0.0);
        for (long d = dlo; d <= dhi; ++d) {
            double wx = static_cast<double>(c) * x + static_cast<double>(d);
            double r2 = wx * wx + cy2;
            if (r2 > cut2) continue;
            long a = ic[static_cast<size_t>(((d % c) + c) % c)];
            if (a < 0) continue;
            long j = (a * params.m) % c;
            // gamma z = a/c - 1/(c w), w = cz+d; phase splits into the root of
            // unity e(m a/c) and the continuous factor e(m u), u = -1/(c w)
            if (r2 < split2) {
                const BigComplex& root = tab.roots[static_cast<size_t>(c)][static_cast<size_t>(j)];
                BigFloat wre = cbx + BigFloat(d, prec);
                BigFloat d2 = wre * wre + cby2;
                BigComplex winv{wre / d2, -(cby / d2)};
                BigFloat ure(prec), uim(prec);
                mpfr_div_si(ure.raw(), winv.re.raw(), -c, MPFR_RNDN);
                mpfr_div_si(uim.raw(), winv.im.raw(), -c, MPFR_RNDN);
                BigComplex term =
                    BigComplex::pow_int(winv, static_cast<unsigned long>(params.k)) *
                    BigComplex::exp_complex(-(two_pi_m * uim), two_pi_m * ure) * root;
                acc += term;
            } else {
                std::complex<double> winv(wx / r2, -cy / r2);
                double mag = std::exp(-tpm * y / r2);
                double ph = -tpm * wx / (static_cast<double>(c) * r2);
                std::complex<double> emu(mag * std::cos(ph), mag * std::sin(ph));
                row += cpow_int(winv, static_cast<unsigned long>(params.k)) * emu *
                       dc[static_cast<size_t>(j)];
            }
        }
        acc.re += BigFloat(row.real(), prec);
        acc.im += BigFloat(row.imag(), prec);
    }
    return acc;
}

LogComplex log_complex_from_big(const BigComplex& z) {
    if (z.re.is_zero() && z.im.is_zero()) return LogComplex::zero();
    double lm = 0.5 * z.abs2().log_abs();
    BigFloat ph(z.prec());
    mpfr_atan2(ph.raw(), z.im.raw(), z.re.raw(), MPFR_RNDN);
    return LogComplex::from_parts(lm, ph.to_double());
}

struct OracleGridKey {
    long k, m, cut, grid;
    double y;
    bool operator==(const OracleGridKey& o) const {
        return k == o.k && m == o.m && cut == o.cut && grid == o.grid && y == o.y;
    }
};

std::mutex g_oracle_mutex;
bool g_oracle_valid = false;
OracleGridKey g_oracle_key;
std::vector<BigComplex> g_oracle_values;  // j = 0..grid/2

}  // namespace

std::complex<double> coefficient_oracle(const ModularParams& params, long n, double y,
                                        long lattice_cut, long grid) {
    if (n < 1) throw DomainError("coefficient_oracle: n must be >= 1");
    if (y < 0.8) throw DomainError("coefficient_oracle: requires y >= 0.8");
    if (lattice_cut < 2) throw DomainError("coefficient_oracle: lattice_cut too small");
    if (grid <= 2 * n)
        throw AliasingError("coefficient_oracle: grid must exceed 2n to separate bin n");

    const mpfr_prec_t prec = config().precision_bits;
    const long half = grid / 2;

    std::lock_guard<std::mutex> lock(g_oracle_mutex);
    OracleGridKey key{params.k, params.m, lattice_cut, grid, y};
    if (!g_oracle_valid || !(g_oracle_key == key)) {
        LatticeTables tab = build_lattice_tables(params, lattice_cut, prec);
        std::vector<BigComplex> vals(static_cast<size_t>(half) + 1, BigComplex(prec));
        BigFloat by(y, prec);
        parallel_for(half + 1, [&](long j) {
            BigFloat bx(j, prec);
            mpfr_div_si(bx.raw(), bx.raw(), grid, MPFR_RNDN);
            vals[static_cast<size_t>(j)] = lattice_point(params, bx, by, tab, prec);
        });
        g_oracle_values = std::move(vals);
        g_oracle_key = key;
        g_oracle_valid = true;
    }

    // extract bin n: (1/grid) sum_j F_j e(-n j / grid), then peel off e^{-2 pi n y};
    // P(-x+iy) = conj(P(x+iy)) supplies the upper half of the grid
    BigFloat two_pi = BigFloat(2.0, prec) * BigFloat::pi(prec);
    BigComplex acc(prec);
    for (long j = 0; j < grid; ++j) {
        const BigComplex& F = (j <= half) ? g_oracle_values[static_cast<size_t>(j)]
                                          : g_oracle_values[static_cast<size_t>(grid - j)];
        BigFloat ang(static_cast<long>(-n * j), prec);
        mpfr_div_si(ang.raw(), ang.raw(), grid, MPFR_RNDN);
        BigComplex tw = BigComplex::cis(two_pi * ang);
        if (j <= half) {
            acc += F * tw;
        } else {
            BigComplex Fc{F.re, -F.im};
            acc += Fc * tw;
        }
    }
    BigFloat scale = exp(two_pi * BigFloat(n, prec) * BigFloat(y, prec));
    mpfr_div_si(scale.raw(), scale.raw(), grid, MPFR_RNDN);
    return {(acc.re * scale).to_double(), (acc.im * scale).to_double()};
}

CoefficientTable build_table(const ModularParams& params, long N, double tol) {
    if (N < 1) throw DomainError("build_table: N must be >= 1");
    validate_tol(tol);
    CoefficientTable table{params, {}, std::nullopt, tol, false};
    table.entries.resize(static_cast<size_t>(N));
    std::atomic<bool> partial{false};
    parallel_for(N, [&](long i) {
        try {
            table.entries[static_cast<size_t>(i)] = coefficient(params, i + 1, tol);
        } catch (const NumericError&) {
            table.entries[static_cast<size_t>(i)] = CoefficientEntry{SignedLogReal::zero(),
                                                                     std::numeric_limits<double>::infinity(), -1};
            partial = true;
        }
    });
    if (params.m > N) {
        try {
            table.norm_entry = coefficient(params, params.m, tol);
        } catch (const NumericError&) {
            table.norm_entry = CoefficientEntry{SignedLogReal::zero(),
                                                std::numeric_limits<double>::infinity(), -1};
            partial = true;
        }
    }
    table.partial = partial.load();
    return table;
}

LogComplex evaluate(const CoefficientTable& table, const ModularPoint& z) {
    if (!(z.y >= 0.5)) throw DomainError("evaluate: requires y >= 0.5");
    const double x = z.x - std::round(z.x);  // expansion is 1-periodic; reduce exactly
    const double tol_log = std::log(table.target_tol);
    LogComplexSum acc;
    int consecutive = 0;
    for (long n = 1; n <= table.size(); ++n) {
        const CoefficientEntry& e = table.entries[static_cast<size_t>(n - 1)];
        if (!e.ok()) throw NumericError("evaluate: table entry " + std::to_string(n) + " failed to build");
        double damp = -2.0 * M_PI * static_cast<double>(n) * z.y;
        if (e.value.sign != 0)
            acc.add(LogComplex::from_parts(e.value.log_mag + damp,
                                           2.0 * M_PI * static_cast<double>(n) * x +
                                               (e.value.sign < 0 ? M_PI : 0.0)));
        double tail_log = e.tail_bound > 0.0 ? std::log(e.tail_bound) : kNegInf;
        double bound_log = log_add_exp(e.value.log_mag, tail_log) + damp;
        if (bound_log < tol_log + acc.log_abs())
            ++consecutive;
        else
            consecutive = 0;
        if (consecutive >= 25) return acc.value();
    }
    throw TableTooShortError(
        "evaluate: expansion tail not certified within the table length; rebuild with larger N",
        table.size());
}

LogComplex evaluate_lattice(const ModularParams& params, const ModularPoint& z, long lattice_cut) {
    if (!(z.y >= 0.8)) throw DomainError("evaluate_lattice: requires y >= 0.8");
    if (lattice_cut < 2) throw DomainError("evaluate_lattice: lattice_cut too small");
    const mpfr_prec_t prec = config().precision_bits;
    LatticeTables tab = build_lattice_tables(params, lattice_cut, prec);
    BigFloat bx(z.x, prec), by(z.y, prec);
    return log_complex_from_big(lattice_point(params, bx, by, tab, prec));
}

SignedLogReal petersson_norm_log(const CoefficientTable& table) {
    const ModularParams& p = table.params;
    if (!table.covers(p.m)) throw DomainError("petersson_norm_log: table does not cover n = m");
    const CoefficientEntry& e = table.at(p.m);
    if (!e.ok()) throw NumericError("petersson_norm_log: entry n = m failed to build");
    double tail_log = e.tail_bound > 0.0 ? std::log(e.tail_bound) : kNegInf;
    if (e.value.sign <= 0 || e.value.log_mag <= tail_log)
        throw DegenerateNormError(
            "petersson_norm_log: p_{k,m}(m) is not certified positive (possible vanishing or "
            "precision failure)");
    double lg = log_gamma(static_cast<double>(p.k - 1));
    double norm_log = lg - static_cast<double>(p.k - 1) * std::log(4.0 * M_PI * static_cast<double>(p.m)) +
                      e.value.log_mag;
    return SignedLogReal::from_log(+1, norm_log);
}

double mass_density(const CoefficientTable& table, const ModularPoint& z) {
    SignedLogReal norm = petersson_norm_log(table);
    LogComplex v = evaluate(table, z);
    if (v.is_zero()) return 0.0;
    return std::exp(2.0 * v.log_mag + static_cast<double>(table.params.k) * std::log(z.y) -
                    norm.log_mag);
}

double coeff_bound_log(const ModularParams& params, long n) {
    double Q = q_cut(params, n);
    double C0 = std::max(1.0, std::ceil(2.0 * Q));
    double log_sum_bound = std::log(C0);  // sum over c <= C0 of |K/c| |J| <= C0
    double log_S_bound = log_add_exp(log_sum_bound, log_tail_raw(params.nu, Q, C0));
    double log_main = std::log(2.0 * M_PI) +
                      0.5 * static_cast<double>(params.nu) *
                          (std::log(static_cast<double>(n)) - std::log(static_cast<double>(params.m))) +
                      log_S_bound;
    return n == params.m ? log_add_exp(0.0, log_main) : log_main;
}

CoeffMajorant coeff_majorant(const ModularParams& params) {
    double nu = static_cast<double>(params.nu);
    double eps_nu = std::exp(-0.5 * std::log(nu) + nu * (1.0 - std::log(4.0))) / (nu - 2.0);
    CoeffMajorant cb;
    cb.half_nu = 0.5 * nu;
    cb.a = 4.0 * M_PI * std::sqrt(static_cast<double>(params.m)) / nu;
    cb.base = std::log(2.0 * M_PI) - 0.5 * nu * std::log(static_cast<double>(params.m)) +
              std::log1p(eps_nu);
    return cb;
}

namespace {

// log of an upper bound for the normalized upper incomplete gamma Q(s,x),
// valid for x > s - 1:  Q(s,x) <= x^{s-1} e^{-x} / Gamma(s) / (1 - (s-1)/x)
double log_gamma_q_bound(double s, double x) {
    if (!(x > s - 1.0)) return std::numeric_limits<double>::infinity();
    return (s - 1.0) * std::log(x) - x - log_gamma(s) - std::log1p(-(s - 1.0) / x);
}

double table_coeff_log_or_bound(const CoefficientTable& t, long n) {
    if (n <= t.size()) {
        const CoefficientEntry& e = t.entries[static_cast<size_t>(n - 1)];
        if (!e.ok()) return coeff_bound_log(t.params, n);
        double tail_log = e.tail_bound > 0.0 ? std::log(e.tail_bound) : kNegInf;
        return log_add_exp(e.value.log_mag, tail_log);
    }
    if (n == t.params.m && t.norm_entry && t.norm_entry->ok()) {
        const CoefficientEntry& e = *t.norm_entry;
        double tail_log = e.tail_bound > 0.0 ? std::log(e.tail_bound) : kNegInf;
        return log_add_exp(e.value.log_mag, tail_log);
    }
    return coeff_bound_log(t.params, n);
}

}  // namespace

double mass_tail_bound(const CoefficientTable& table, double y) {
    const ModularParams& p = table.params;
    const double s = static_cast<double>(p.k - 1);
    const CoefficientEntry& em = table.at(p.m);
    if (em.value.sign <= 0)
        throw DegenerateNormError("mass_tail_bound: p_{k,m}(m) not positive");
    const double log_pm = em.value.log_mag;

    // Parseval in x: mass above height y is
    //   sum_n p(n)^2 (m/n)^{k-1} Q(k-1, 4 pi n y) / p(m)
    double acc = kNegInf;
    double prev = std::numeric_limits<double>::infinity();
    int settled = 0;
    for (long n = 1; n <= 4 * (table.size() + p.m) + 400; ++n) {
        double lq = log_gamma_q_bound(s, 4.0 * M_PI * static_cast<double>(n) * y);
        if (std::isinf(lq) && lq > 0) return std::numeric_limits<double>::infinity();
        double lw = 2.0 * table_coeff_log_or_bound(table, n) +
                    s * (std::log(static_cast<double>(p.m)) - std::log(static_cast<double>(n))) +
                    lq - log_pm;
        acc = log_add_exp(acc, lw);
        // certified geometric cutoff: past the table and the peak each factor
        // shrinks by at least e^{-4 pi y} per step up to a polynomial factor
        if (n > std::max<long>({table.size(), p.m, static_cast<long>(s / (4.0 * M_PI * y)) + 1})) {
            double ratio = lw - prev;
            if (lw < acc - 46.0 && ratio < -1.0) {
                ++settled;
                if (settled >= 3) {
                    double rem = lw + ratio - std::log1p(-std::exp(ratio));
                    acc = log_add_exp(acc, rem);
                    return std::exp(acc);
                }
            } else {
                settled = 0;
            }
        }
        prev = lw;
    }
    return std::exp(acc);
}

double mass_integral(const CoefficientTable& table, const Region& region, const QuadSpec& spec) {
    if (!region.subset_of_fundamental_domain())
        throw DomainError("mass_integral: region must lie inside the fundamental domain");
    const ModularParams& p = table.params;
    SignedLogReal norm = petersson_norm_log(table);

    Region work = region;
    if (std::isinf(region.y1)) {
        double y_max = std::max(2.0, (static_cast<double>(p.k - 2) + 2.0) / (4.0 * M_PI));
        int guard = 0;
        while (mass_tail_bound(table, y_max) > 0.3 * spec.tol) {
            y_max *= 1.2;
            if (++guard > 200)
                throw CertificationError("mass_integral: cannot certify the truncation height");
        }
        work = make_region(region.x0, region.x1, region.y0, y_max, region.clipped_by_unit_circle);
    }

    QuadSpec local = spec;
    double ybot = std::min(work.y_low(work.x0), work.y_low(work.x1));
    double urange = std::log(work.y1) - std::log(ybot);
    if (local.base_ny <= 0)
        local.base_ny = std::clamp(static_cast<int>(std::ceil(urange * (1.2 + 0.45 * std::sqrt(static_cast<double>(p.k))))), 8, 40);
    if (local.base_nx <= 0)
        local.base_nx = std::clamp(static_cast<int>(std::ceil((work.x1 - work.x0) *
                                                              (4.0 + 0.07 * static_cast<double>(p.k) / ybot))),
                                   6, 40);

    const double klog = static_cast<double>(p.k);
    auto rho = [&](double x, double y) {
        LogComplex v = evaluate(table, ModularPoint{x, y});
        if (v.is_zero()) return 0.0;
        return std::exp(2.0 * v.log_mag + klog * std::log(y) - norm.log_mag);
    };
    return region_integral_real(work, rho, local);
}

long suggest_table_length(const ModularParams& params, double y_min, double tol,
                          double margin_nats) {
    if (!(y_min > 0.0)) throw DomainError("suggest_table_length: y_min must be positive");
    double peak = kNegInf;
    long n = 1;
    int below = 0;
    double thresh = kNegInf;
    for (; n < 2000000; ++n) {
        double t = coeff_bound_log(params, n) - 2.0 * M_PI * static_cast<double>(n) * y_min;
        peak = std::max(peak, t);
        thresh = peak + std::log(tol) - margin_nats - 5.0;
        if (t < thresh)
            ++below;
        else
            below = 0;
        if (below >= 25) break;
    }
    return n + 10;
}

}  // namespace pklab
