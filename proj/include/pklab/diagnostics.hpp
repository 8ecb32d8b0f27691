#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pklab/signed_log.hpp"

namespace pklab {

// One grid tuple of a bound check: the free parameters of the inequality, the
// two sides in log scale, and a flag for tuples whose sides could not be
// produced as finite numbers (the report then fails regardless of ratios).
struct BoundPoint {
    std::vector<double> params;
    SignedLogReal lhs;
    SignedLogReal rhs;
    bool flagged = false;
};

// Calibrated-constant report for one inequality or trend.
//
// Conventions.  sup_ratio is the grid supremum of |lhs|/rhs.  Reports with a
// constant pinned in advance (Weil bound: 1, Bessel envelopes: 10) pass iff
// the sup stays at or below that constant.  Calibration reports have no
// a-priori constant: calibrated_constant records the measured sup and pass
// means every tuple came out finite.  Trend reports (decay, convergence)
// encode their verdict the same way: calibrated_constant = sup_ratio when the
// trend holds and -1 when it does not, so the invariant
//     pass  <=>  sup_ratio <= calibrated_constant
// holds for every report this module emits.  Exhaustive sweeps whose full
// grids would be millions of tuples store only the extremal tuple per outer
// parameter plus any violating tuples.
struct BoundReport {
    std::string bound_id;
    std::vector<BoundPoint> grid;
    double sup_ratio = 0.0;
    double calibrated_constant = 0.0;
    bool pass = false;
};

// sup over nu in nu_set, x in x_grid of |J_nu(nu x)| divided by the two-piece
// envelope (f on (0,1], g on [1, infinity)); requires nu >= 15, passes iff
// the sup is at most 10.  params per tuple: {nu, x}.
BoundReport check_bessel_envelopes(const std::vector<long>& nu_set,
                                   const std::vector<double>& x_grid);

// exhaustive |K(m,n;c)| <= 2^{omega*(c/d)} sqrt(c d), d = gcd(m,n,c), over
// 1 <= c <= c_max, 1 <= m,n <= mn_max.  The constant is exactly 1 with only
// 1e-9 rounding slack; no calibration.  The grid keeps, per modulus, the
// tuple with the largest ratio (params {c, m, n}) plus every violating tuple.
BoundReport check_kloosterman_bound(long c_max, long mn_max);

struct SmnGridPoint {
    long k = 12;
    long m = 1;
    long n = 1;
};

// the two pieces of S_{m,n} split at Q against their separate bounds: the
// c <= Q piece against the epsilon-weighted divisor-sum bound at B = 1 and
// the c > Q piece against Q/k + k^{-1/3}.  Two tuples per grid point with
// params {k, m, n, piece} where piece 0 = low, 1 = high.  Calibration report.
BoundReport check_smn_split(const std::vector<SmnGridPoint>& grid, double tol);

// |p_{k,m}(n)| against
//   (n/m)^{(k-1)/2} ((nm)^{1/4+eps}/k + gcd(m,n)^{1/2} k^{1/6}/(nm)^{1/4-eps})
// at eps = 0.05; requires k >= 16 and n != m on every tuple.  Calibration
// report; params {k, m, n}.
BoundReport check_pkmn_bound(const std::vector<SmnGridPoint>& grid);

// |p_{k,m(k)}(m(k)) - 1| along k_list: passes iff the sequence strictly
// decreases and the log-log regression slope is at most -1/5.  Trend report;
// params {k, m}, lhs = |p - 1|, rhs = 1.
BoundReport check_pkmm_limit(const std::vector<long>& k_list,
                             const std::function<long(long)>& m_of_k);

// Smooth compactly supported test function on a box strictly inside the
// fundamental domain: a plateau with cosine-squared tapers, value 1 on the
// central half of the box in each coordinate and 0 outside the box (C^1 with
// bounded curvature, so the adaptive quadrature converges at full rate).
struct BumpSpec {
    double x_lo = 0.0;
    double x_hi = 0.0;
    double y_lo = 0.0;
    double y_hi = 0.0;
    double value(double x, double y) const;
};

// three reference bumps: a tall central plateau, a wide high-altitude one,
// and a small off-center one hugging the circle arc
std::vector<BumpSpec> standard_bumps();

// discrepancy D(k) = |<psi, mass> - (3/pi)<psi, 1>| per bump along k_list
// with m = m_of_k(k): passes iff D(k) strictly decreases along k_list for
// every bump (callers probing a non-equidistributing schedule assert the
// report does NOT pass).  Trend report; params {k, m, bump}, lhs = D(k),
// rhs = (3/pi)<psi, 1>.
BoundReport check_mass_convergence(const std::vector<long>& k_list,
                                   const std::function<long(long)>& m_of_k,
                                   const std::vector<BumpSpec>& bumps);

// serialization: JSON object / CSV with a header row, both reproducing the
// doubles exactly (shortest round-trip decimal)
std::string report_to_json(const BoundReport& report);
std::string report_to_csv(const BoundReport& report);

}  // namespace pklab
