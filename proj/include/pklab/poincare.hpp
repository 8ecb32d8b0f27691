#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <vector>

#include "pklab/domain.hpp"
#include "pklab/signed_log.hpp"

namespace pklab {

// weight k, index m; nu = k - 1 appears in every Bessel order and exponent
struct ModularParams {
    long k;
    long m;
    long nu;
    ModularParams(long k_, long m_);
};

struct CoefficientEntry {
    SignedLogReal value;
    double tail_bound = 0.0;  // linear scale, same units as value
    long c_truncation = 0;    // last modulus summed; -1 marks a failed entry
    bool ok() const { return c_truncation > 0; }
};

// Fourier coefficients p_{k,m}(n) for n = 1..size(); when m exceeds the dense
// range an extra entry for n = m is carried so the Petersson norm is always
// available from the same object.
struct CoefficientTable {
    ModularParams params;
    std::vector<CoefficientEntry> entries;
    std::optional<CoefficientEntry> norm_entry;  // entry for n = m when m > size()
    double target_tol = 1e-10;
    bool partial = false;

    long size() const { return static_cast<long>(entries.size()); }
    bool covers(long n) const;
    const CoefficientEntry& at(long n) const;  // 1-based
};

double q_cut(const ModularParams& params, long n);

CoefficientEntry coefficient(const ModularParams& params, long n, double tol);

// lattice-sum / discrete-Fourier route, independent of the Kloosterman path:
// P_{k,m} evaluated on a grid of x-values at height y over the coprime pairs
// with c >= 1 and |c z + d| <= lattice_cut, then bin n extracted
std::complex<double> coefficient_oracle(const ModularParams& params, long n, double y,
                                        long lattice_cut, long grid);

CoefficientTable build_table(const ModularParams& params, long N, double tol);

LogComplex evaluate(const CoefficientTable& table, const ModularPoint& z);
LogComplex evaluate_lattice(const ModularParams& params, const ModularPoint& z, long lattice_cut);

SignedLogReal petersson_norm_log(const CoefficientTable& table);

double mass_density(const CoefficientTable& table, const ModularPoint& z);
double mass_integral(const CoefficientTable& table, const Region& region, const QuadSpec& spec);

// certified log-scale upper bound on |p_{k,m}(n)| from |K| <= c, |J| <= 1 and
// the geometric tail of the c-sum
double coeff_bound_log(const ModularParams& params, long n);

// Smooth concave majorant of the c-sum part of coeff_bound_log: for
// C0 = max(1, ceil(2Q)) the c-sum bound satisfies C0 + tail <=
// (2Q + 1)(1 + eps_nu) with eps_nu = nu^{-1/2} (e/4)^nu / (nu - 2), the
// certified tail at C = 2Q being at most eps_nu * C0.  The ceiling kinks of
// the exact bound are absorbed, leaving a per-term log that is concave in n,
// which the downstream truncation certificates rely on.  The Kronecker delta
// at n == m is NOT covered; callers summing ranges that contain n = m must
// add exp(-2 pi m y) for that term separately.
struct CoeffMajorant {
    double half_nu = 0.0;
    double a = 0.0;     // Q(n) = a sqrt(n)
    double base = 0.0;  // log(2 pi) - (nu/2) log m + log1p(eps_nu)
    double operator()(double n) const {
        return base + half_nu * std::log(n) + std::log(2.0 * a * std::sqrt(n) + 1.0);
    }
};
CoeffMajorant coeff_majorant(const ModularParams& params);

// The Kloosterman-Bessel sum S_{m,n} = sum_c K(m,n;c)/c * J_{nu}(4 pi
// sqrt(mn)/c) split at the Bessel transition Q = 4 pi sqrt(mn)/nu: `low`
// collects the moduli c <= Q (oscillatory J regime), `high` the moduli c > Q
// (power-decay regime), truncated where the certified remainder drops below
// tol in absolute terms.  coefficient() recovers p(n) = delta_{mn} +
// 2 pi i^k (n/m)^{nu/2} (low + high).
struct SmnSplit {
    SignedLogReal low;
    SignedLogReal high;
    double tail_bound = 0.0;  // absolute remainder bound on the high piece
    double q = 0.0;
};

SmnSplit smn_split(const ModularParams& params, long n, double tol);

// certified upper bound on the normalized mass above height y (Parseval in x,
// incomplete-gamma tail per mode)
double mass_tail_bound(const CoefficientTable& table, double y);

// table length letting evaluate() terminate at any height >= y_min; extra
// margin_nats lowers the termination threshold for use near zeros
long suggest_table_length(const ModularParams& params, double y_min, double tol,
                          double margin_nats = 0.0);

}  // namespace pklab
