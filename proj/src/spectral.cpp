#include "pklab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include "pklab/arith.hpp"
#include "pklab/errors.hpp"
#include "pklab/parallel.hpp"
#include "pklab/special.hpp"

namespace pklab {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

std::complex<double> cis(double th) { return {std::cos(th), std::sin(th)}; }

// ---------------------------------------------------------------------------
// K_{it} memo, keyed by the exact (t, argument) pair.  Values are pure, so a
// racing double-compute is benign; the size cap only stops insertion.
struct KMemo {
    std::mutex mu;
    std::map<std::pair<double, double>, double> vals;
};

KMemo& k_memo() {
    static KMemo m;
    return m;
}

double k_cached(double t, double w) {
    const auto key = std::make_pair(t, w);
    {
        std::lock_guard<std::mutex> lock(k_memo().mu);
        auto it = k_memo().vals.find(key);
        if (it != k_memo().vals.end()) return it->second;
    }
    double v = bessel_k_imag(t, w);
    std::lock_guard<std::mutex> lock(k_memo().mu);
    if (k_memo().vals.size() < (1u << 22)) k_memo().vals.emplace(key, v);
    return v;
}

// |K_{it}(w)| <= K_0(w) < sqrt(pi/(2w)) e^{-w}
double k0_env_log(double w) { return 0.5 * std::log(M_PI / (2.0 * w)) - w; }

// lambda(n) = n^{it} sigma_{-2it}(n) = sum_{ab=n} (b/a)^{it}; the conjugate
// pairing makes it exactly real, so only the cosine is accumulated.
double lambda_t(double t, long long n) {
    double ln_n = std::log(static_cast<double>(n));
    double acc = 0.0;
    for (long long d : divisors(n)) acc += std::cos(t * (ln_n - 2.0 * std::log(static_cast<double>(d))));
    return acc;
}

}  // namespace

EisensteinSpec::EisensteinSpec(double t_, double tol_) : t(t_), tol(tol_) {
    double a = std::fabs(t_);
    // below 1e-3 the xi(2it) pole makes the scattering term numerically
    // meaningless; above 100 the zeta/K-Bessel backends are uncalibrated
    if (!(a >= 1e-3 && a <= 100.0))
        throw DomainError("EisensteinSpec: |t| must lie in [1e-3, 100]");
    if (!(tol_ > 0.0 && tol_ <= 1e-2)) throw DomainError("EisensteinSpec: tol out of range");
}

std::complex<double> eisenstein_eval(const EisensteinSpec& spec, const ModularPoint& z) {
    if (!(z.y >= 0.5)) throw DomainError("eisenstein_eval: requires y >= 0.5");
    const double t = spec.t;
    const double y = z.y;
    const double x = z.x - std::round(z.x);

    LogComplex lam = xi({1.0, 2.0 * t});
    std::complex<double> inv_lam = std::exp(-lam.log_mag) * cis(-lam.phase);
    std::complex<double> phi_t = cis(-2.0 * lam.phase);  // xi(2it)/xi(1+2it), |phi_t| = 1

    double sy = std::sqrt(y);
    std::complex<double> yterm = sy * cis(t * std::log(y));  // y^{1/2+it}
    std::complex<double> val = yterm + phi_t * std::conj(yterm);

    std::complex<double> coef = 4.0 * sy * inv_lam;
    double coef_mag = std::abs(coef);
    for (long n = 1;; ++n) {
        if (n > 200000) throw NumericError("eisenstein_eval: cusp expansion did not truncate");
        double w = kTwoPi * n * y;
        // |lambda(n)| <= d(n) <= n and K_{it} <= K_0; monotone in n for y >= 1/2
        double env = coef_mag * n * std::exp(k0_env_log(w));
        if (env < spec.tol * sy) break;
        val += coef * (lambda_t(t, n) * k_cached(t, w) * std::cos(kTwoPi * n * x));
    }
    return val;
}

std::complex<double> weighted_density_integral(
    const CoefficientTable& table, const std::function<std::complex<double>(double, double)>& f,
    const QuadSpec& quad, double env_sqrt_y) {
    const ModularParams& p = table.params;
    if (!(env_sqrt_y > 0.0)) throw DomainError("weighted_density_integral: bad envelope scale");

    // Truncation height: the strip tail of the density, weighted by the
    // sqrt-y envelope of f.  sqrt(y/Y) <= e^{(y-Y)/(2Y)} for y >= Y trades the
    // weight for a rate shift of 1/(2Y) in every mode, costing a factor e
    // once Y >= max(1, k/4pi).
    double y_max = std::max(2.0, static_cast<double>(p.k) / (4.0 * M_PI));
    int guard = 0;
    while (env_sqrt_y * M_E * std::sqrt(y_max) * mass_tail_bound(table, y_max) > 0.3 * quad.tol) {
        y_max *= 1.2;
        if (++guard > 200)
            throw CertificationError("weighted_density_integral: tail bound did not certify");
    }

    Region F = fundamental_domain(y_max);
    QuadSpec local = quad;
    double ybot = std::sqrt(3.0) / 2.0;
    if (local.base_ny <= 0) {
        double urange = std::log(y_max / ybot);
        local.base_ny = std::clamp(
            static_cast<int>(std::ceil(urange * (1.2 + 0.45 * std::sqrt(static_cast<double>(p.k))))),
            8, 40);
    }
    if (local.base_nx <= 0)
        local.base_nx = std::clamp(
            static_cast<int>(std::ceil(4.0 + 0.07 * static_cast<double>(p.k) / ybot)), 6, 40);

    auto g = [&](double x, double y) { return mass_density(table, ModularPoint{x, y}) * f(x, y); };
    return region_integral(F, g, local);
}

std::complex<double> inner_product_direct(const CoefficientTable& table,
                                          const EisensteinSpec& spec, const QuadSpec& quad) {
    // sqrt-y growth envelope of |E| for the tail certificate: the constant
    // term contributes 2 sqrt y; the cusp part is maximal at the smallest
    // possible truncation height (y = 2) and decays from there
    LogComplex lam = xi({1.0, 2.0 * spec.t});
    double coef_mag = 4.0 * std::exp(-lam.log_mag);
    double cusp = 0.0;
    for (long n = 1; n <= 64; ++n)
        cusp += static_cast<double>(n) * std::exp(k0_env_log(kTwoPi * n * 2.0));
    double env = 2.0 + coef_mag * cusp * 1.01 / std::sqrt(2.0);

    auto f = [&](double x, double y) { return eisenstein_eval(spec, ModularPoint{x, y}); };
    return weighted_density_integral(table, f, quad, env);
}

namespace {

using CbMajorant = CoeffMajorant;

// Certified bound on sum_r |p(r)| e^{-2 pi r y} built from the smooth
// coefficient majorant, used for the lower-cutoff certificate.  The exponent
// is concave in r, so past the first ratio below the (reachable) target the
// remainder is geometric.  The majorant misses the Kronecker delta at r = m,
// so that term seeds the accumulator.
double log_series_env_bound(const ModularParams& p, double y) {
    CbMajorant cbm = coeff_majorant(p);
    auto lw = [&](double r) { return cbm(r) - kTwoPi * r * y; };
    double delta = std::min(0.05, M_PI * y);  // the ratio tends to -2 pi y
    double acc = -kTwoPi * static_cast<double>(p.m) * y;
    for (long r = 1; r <= 100000000; ++r) {
        double cur = lw(static_cast<double>(r));
        acc = log_add_exp(acc, cur);
        double ratio = lw(static_cast<double>(r + 1)) - cur;
        if (ratio < -delta)
            return log_add_exp(acc, cur + ratio - std::log1p(-std::exp(ratio)));
    }
    throw NumericError("log_series_env_bound: series did not settle");
}

// Certified bound on sup_x |E(x + iy)| in log scale.
double log_phi_env_bound(double lam_log_mag, double y) {
    double a = kTwoPi * y;
    // sum_{s>=1} s K0env(2 pi s y) = (1/2) y^{-1/2} sum sqrt(s) e^{-as}
    //   <= (1/2) y^{-1/2} (Gamma(3/2) a^{-3/2} + sup_s sqrt(s) e^{-as})
    double sum_sqrt = 0.5 * std::sqrt(M_PI) * std::pow(a, -1.5) +
                      std::sqrt(1.0 / (2.0 * a)) * std::exp(-0.5);
    double cusp = 4.0 * std::sqrt(y) * std::exp(-lam_log_mag) * 0.5 / std::sqrt(y) * sum_sqrt;
    return std::log(2.0 * std::sqrt(y) + cusp);
}

struct UnfoldContext {
    const CoefficientTable* table;
    double t;
    double tol;
    long k;
    long m;
    std::complex<double> inv_lam;
    std::complex<double> phi_t;
    double lam_log_mag;
    double scale0_log;  // 2 |p(m)| Gamma(k-1/2) / (4 pi m)^{k-1/2}, the const-term scale
    bool const_only;
    CbMajorant cbm;
    std::vector<double> lam_n;    // lambda_t(t, s), 1-based
    std::vector<double> logp;     // entry log magnitudes, 1-based
    std::vector<double> signp;    // entry signs, 1-based
};

double p_entry(const UnfoldContext& c, long r) {
    return c.signp[static_cast<size_t>(r)] * std::exp(c.logp[static_cast<size_t>(r)]);
}

// log of a certified bound on sum_{s' >= sp} (both convolution branches), in
// the same absolute units as hat itself.  The r = m + s' branch is enveloped
// by the smooth coefficient majorant, whose per-term log is concave in s';
// the sum splits into (count x max) over the stretch where the term ratio has
// not yet certified geometric decay, plus the geometric remainder past it.
double conv_tail_log(const CbMajorant& cbm, long m, double y, long sp, double max_pe_log,
                     double ccoef_log) {
    double md = static_cast<double>(m);
    double spd = static_cast<double>(sp);

    auto f2 = [&](double s) {
        return ccoef_log + std::log(s) + k0_env_log(kTwoPi * s * y) + cbm(md + s) -
               kTwoPi * (md + s) * y;
    };
    auto r2 = [&](double s) { return f2(s + 1.0) - f2(s); };  // strictly decreasing

    // the ratio tends to -4 pi y, so a target below that is always reached
    double delta = std::min(0.05, kTwoPi * y);
    double rem2;
    if (r2(spd) <= -delta) {
        rem2 = f2(spd) - std::log1p(-std::exp(r2(spd)));
    } else {
        long slo = sp, shi = 2 * sp + 1;
        while (r2(static_cast<double>(shi)) > -delta) {
            slo = shi;
            shi *= 2;
            if (shi > (1L << 50)) return std::numeric_limits<double>::infinity();
        }
        while (shi - slo > 1) {  // first s with r2(s) <= -delta
            long mid = slo + (shi - slo) / 2;
            (r2(static_cast<double>(mid)) > -delta ? slo : shi) = mid;
        }
        long s_star = sp;  // integer argmax of f2 on [sp, shi-1]
        if (r2(spd) > 0.0) {
            long alo = sp, ahi = shi;
            while (ahi - alo > 1) {
                long mid = alo + (ahi - alo) / 2;
                (r2(static_cast<double>(mid)) > 0.0 ? alo : ahi) = mid;
            }
            s_star = std::min(ahi, shi - 1);
        }
        double middle = std::log(static_cast<double>(shi - sp)) + f2(static_cast<double>(s_star));
        double geo = f2(static_cast<double>(shi)) -
                     std::log1p(-std::exp(r2(static_cast<double>(shi))));
        rem2 = log_add_exp(middle, geo);
    }

    // branch r = m - s' (only while s' <= m-1): concave with peak near
    // 1/(4 pi y), bounded by count x max, or geometrically once the ratio
    // test certifies
    double rem1 = kNegInf;
    if (sp <= m - 1) {
        auto h = [&](double s) {
            return ccoef_log + std::log(s) + k0_env_log(kTwoPi * s * y) + max_pe_log;
        };
        double s_pk = 1.0 / (2.0 * kTwoPi * y);
        double c1 = std::min(md - 1.0, std::max(spd, std::floor(s_pk)));
        double c2 = std::min(md - 1.0, c1 + 1.0);
        rem1 = std::log(md - spd) + std::max(h(c1), h(c2));
        double r1 = 0.5 * std::log1p(1.0 / spd) - kTwoPi * y;
        if (r1 < -1e-3) rem1 = std::min(rem1, h(spd) - std::log1p(-std::exp(r1)));
    }
    return log_add_exp(rem1, rem2);
}

// m-th Fourier coefficient of phi_t * P at height y, accurate to e^{eps_log}
std::complex<double> hat_m(const UnfoldContext& c, double y, double eps_log) {
    double sy = std::sqrt(y);
    std::complex<double> yterm = sy * cis(c.t * std::log(y));
    std::complex<double> c0 = yterm + c.phi_t * std::conj(yterm);
    std::complex<double> hat = p_entry(c, c.m) * std::exp(-kTwoPi * c.m * y) * c0;
    if (c.const_only) return hat;

    double max_pe_log = kNegInf;
    for (long r = 1; r <= c.m - 1; ++r)
        max_pe_log = std::max(max_pe_log, c.logp[static_cast<size_t>(r)] - kTwoPi * r * y);

    std::complex<double> ccoef = 2.0 * sy * c.inv_lam;
    double ccoef_log = std::log(2.0 * sy) - c.lam_log_mag;
    long size = c.table->size();
    long next_check = 1;  // the tail certificate costs a few searches, so
                          // probe it on a geometric schedule only
    for (long s = 1;; ++s) {
        if (s >= next_check) {
            if (conv_tail_log(c.cbm, c.m, y, s, max_pe_log, ccoef_log) < eps_log) break;
            next_check = s + s / 4 + 1;
        }
        if (c.m + s > size)
            throw TableTooShortError(
                "inner_product_unfolded: convolution needs coefficients past the table end", size);
        double conv = p_entry(c, c.m + s) * std::exp(-kTwoPi * (c.m + s) * y);
        if (s <= c.m - 1) conv += p_entry(c, c.m - s) * std::exp(-kTwoPi * (c.m - s) * y);
        hat += ccoef * (c.lam_n[static_cast<size_t>(s)] * k_cached(c.t, kTwoPi * s * y) * conv);
    }
    return hat;
}

// lower integration cutoff: largest rho <= 0.3 whose certified integrand
// bound over (0, rho y*] stays below the tolerance budget
double unfold_lower_cutoff(const ModularParams& p, double lam_log_mag, double scale0_log,
                           double tol) {
    double y_star = static_cast<double>(p.k - 2) / (4.0 * M_PI * p.m);
    double rho = 0.3;
    while (rho > 0.004) {
        double y_lo = rho * y_star;
        // |hat| <= B_P B_phi, and the bound times y^{k-2} e^{-2 pi m y}
        // increases in y below the peak, so length * value-at-cutoff covers
        // the whole lower tail
        double lower_log = std::log(y_lo) + log_series_env_bound(p, y_lo) +
                           log_phi_env_bound(lam_log_mag, y_lo) - kTwoPi * p.m * y_lo +
                           (p.k - 2) * std::log(y_lo);
        // the extra factor 10 lets the caller certify against a |p(m)|-free
        // scale as long as |p(m)| >= 0.1, keeping the cutoff independent of
        // the table (the a-priori length estimate then matches exactly)
        if (lower_log <= std::log(0.002 * tol) + scale0_log) return y_lo;
        rho *= 0.75;
    }
    throw CertificationError("inner_product_unfolded: lower cutoff did not certify");
}

}  // namespace

long unfolded_table_length(const ModularParams& params, double t, double tol) {
    EisensteinSpec probe(t, std::min(tol, 1e-2));
    (void)probe;  // validates the (t, tol) pair
    LogComplex lam = xi({1.0, 2.0 * t});
    // scale0 here omits |p(m)| (no table yet); p(m) enters the budget and hat
    // linearly, so it cancels from the stopping criterion to first order and
    // the envelope-only surrogate is the right a-priori version
    double scale0_log = log_gamma(params.k - 0.5) -
                        (params.k - 0.5) * std::log(4.0 * M_PI * params.m) + std::log(2.0);
    double y_lo = unfold_lower_cutoff(params, lam.log_mag, scale0_log, tol);
    double y_cut = (params.k + 40.0) / (M_PI * params.m);
    double u0 = std::log(y_lo), u1 = std::log(y_cut);
    CbMajorant cbm = coeff_majorant(params);

    long max_s = 0;
    const int probes = 96;
    for (int i = 0; i <= probes; ++i) {
        double u = u0 + (u1 - u0) * i / probes;
        double y = std::exp(u);
        double eps_log = std::log(0.02 * tol) + scale0_log - (params.k - 1) * u +
                         kTwoPi * params.m * y - std::log(u1 - u0);
        double ccoef_log = std::log(2.0 * std::sqrt(y)) - lam.log_mag;
        // branch-1 envelope without a table: the closed-form coefficient
        // bound stands in for the entry magnitudes
        double max_pe_log = kNegInf;
        for (long r = 1; r <= params.m - 1; ++r)
            max_pe_log = std::max(max_pe_log, coeff_bound_log(params, r) - kTwoPi * r * y);

        long s = 1;
        while (conv_tail_log(cbm, params.m, y, s, max_pe_log, ccoef_log) >= eps_log) {
            s += s / 4 + 1;
            if (s > 10000000)
                throw NumericError("unfolded_table_length: truncation search did not settle");
        }
        max_s = std::max(max_s, s);
    }
    // headroom: grid points between probes, the geometric stepping overshoot,
    // and the |p(m)| shift of the node budgets (covered down to |p(m)| = 0.1)
    return params.m + max_s + max_s / 4 + 16;
}

LogComplex inner_product_unfolded(const CoefficientTable& table, const EisensteinSpec& spec,
                                  bool constant_term_only) {
    const ModularParams& p = table.params;
    long k = p.k, m = p.m;
    const CoefficientEntry& em = table.at(m);
    if (!em.ok()) throw NumericError("inner_product_unfolded: coefficient p(m) unusable");
    if (!constant_term_only && table.size() < m + 1)
        throw TableTooShortError("inner_product_unfolded: dense table must reach past n = m",
                                 table.size());

    UnfoldContext c;
    c.table = &table;
    c.t = spec.t;
    c.tol = spec.tol;
    c.k = k;
    c.m = m;
    LogComplex lam = xi({1.0, 2.0 * spec.t});
    c.lam_log_mag = lam.log_mag;
    c.inv_lam = std::exp(-lam.log_mag) * cis(-lam.phase);
    c.phi_t = cis(-2.0 * lam.phase);
    double scale0_env = log_gamma(k - 0.5) - (k - 0.5) * std::log(4.0 * M_PI * m) + std::log(2.0);
    c.scale0_log = em.value.log_mag + scale0_env;
    c.const_only = constant_term_only;
    c.cbm = coeff_majorant(p);

    long size = table.size();
    c.logp.assign(static_cast<size_t>(size) + 1, kNegInf);
    c.signp.assign(static_cast<size_t>(size) + 1, 0.0);
    for (long r = 1; r <= size; ++r) {
        const CoefficientEntry& e = table.at(r);
        if (!e.ok()) throw NumericError("inner_product_unfolded: table entry unusable");
        c.logp[static_cast<size_t>(r)] = e.value.log_mag;
        c.signp[static_cast<size_t>(r)] = static_cast<double>(e.value.sign);
    }
    if (m > size) {  // norm-entry table in constant-term-only mode
        c.logp.resize(static_cast<size_t>(m) + 1, kNegInf);
        c.signp.resize(static_cast<size_t>(m) + 1, 0.0);
        c.logp[static_cast<size_t>(m)] = em.value.log_mag;
        c.signp[static_cast<size_t>(m)] = static_cast<double>(em.value.sign);
    }
    if (!constant_term_only) {
        c.lam_n.assign(static_cast<size_t>(size - m) + 1, 0.0);
        for (long s = 1; s <= size - m; ++s) c.lam_n[static_cast<size_t>(s)] = lambda_t(spec.t, s);
    }

    // certify the cutoff against the |p(m)|-free scale when possible, so the
    // grid matches the one unfolded_table_length planned for; very small
    // |p(m)| falls back to the actual scale (x10 restores the 0.02 budget)
    double y_lo = em.value.log_mag >= std::log(0.1)
                      ? unfold_lower_cutoff(p, lam.log_mag, scale0_env, spec.tol)
                      : unfold_lower_cutoff(p, lam.log_mag, c.scale0_log + std::log(10.0),
                                            spec.tol);
    double y_cut = (k + 40.0) / (M_PI * m);
    double u0 = std::log(y_lo), u1 = std::log(y_cut);

    // upper tail: |hat| <= B_P(y) B_phi(y) with B_P(y) <= B_P(y_cut)
    // e^{-2 pi (y - y_cut)} and B_phi/sqrt y decreasing, so the remainder is a
    // Gamma tail at rate 2 pi (m+1)
    {
        double bp_cut = log_series_env_bound(p, y_cut);
        double bphi_cut = log_phi_env_bound(lam.log_mag, y_cut) - 0.5 * std::log(y_cut);
        double s_gam = k - 0.5;
        double rate = kTwoPi * (m + 1.0);
        double x0 = rate * y_cut;
        if (x0 <= s_gam - 1.0)
            throw CertificationError("inner_product_unfolded: upper tail outside certified regime");
        double lnq = (s_gam - 1.0) * std::log(x0) - x0 - log_gamma(s_gam) -
                     std::log1p(-(s_gam - 1.0) / x0);
        double upper_log = bp_cut + kTwoPi * y_cut + bphi_cut + log_gamma(s_gam) -
                           s_gam * std::log(rate) + lnq;
        if (upper_log > std::log(0.02 * spec.tol) + c.scale0_log)
            throw CertificationError("inner_product_unfolded: upper tail bound did not certify");
    }

    long ncells = std::max<long>(16, static_cast<long>(std::ceil(
                                         2.2 * (u1 - u0) * std::sqrt(static_cast<double>(k - 2)))));

    auto composite = [&](long nc) -> LogComplex {
        std::vector<LogComplex> cells(static_cast<size_t>(nc), LogComplex::zero());
        parallel_for(nc, [&](long i) {
            double ua = u0 + (u1 - u0) * static_cast<double>(i) / nc;
            double ub = u0 + (u1 - u0) * static_cast<double>(i + 1) / nc;
            LogComplexSum acc;
            for (int j = 0; j < 16; ++j) {
                double u, wu;
                gl16_map(ua, ub, j, &u, &wu);
                double y = std::exp(u);
                double eps_log = std::log(0.02 * c.tol) + c.scale0_log - (k - 1) * u +
                                 kTwoPi * m * y - std::log(u1 - u0);
                std::complex<double> hat = hat_m(c, y, eps_log);
                if (hat == std::complex<double>(0.0, 0.0)) continue;
                LogComplex lc = LogComplex::from_complex(hat);
                lc.log_mag += (k - 1) * u - kTwoPi * m * y + std::log(wu);
                acc.add(lc);
            }
            cells[static_cast<size_t>(i)] = acc.value();
        });
        LogComplexSum tot;
        for (const LogComplex& v : cells)
            if (!v.is_zero()) tot.add(v);
        return tot.value();
    };

    LogComplex prev = composite(ncells);
    for (int pass = 0; pass < 5; ++pass) {
        ncells *= 2;
        LogComplex cur = composite(ncells);
        if (prev.is_zero() && cur.is_zero()) return cur;
        if (!cur.is_zero() && !prev.is_zero()) {
            std::complex<double> ratio = (prev / cur).to_complex();
            if (std::abs(ratio - std::complex<double>(1.0, 0.0)) <= 0.25 * spec.tol) return cur;
        }
        prev = cur;
    }
    throw NumericError("inner_product_unfolded: quadrature did not converge");
}

}  // namespace pklab
