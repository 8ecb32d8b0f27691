#pragma once

#include <functional>
#include <vector>

#include "pklab/domain.hpp"
#include "pklab/poincare.hpp"
#include "pklab/rational.hpp"
#include "pklab/signed_log.hpp"

namespace pklab {

// Symmetry loci of the fundamental domain boundary on which the series is
// real after the stated normalization.
enum class BoundaryLocus {
    Arc,            // z = e^{i theta}, parameter = theta in [pi/3, pi/2]
    VerticalEdge,   // z = 1/2 + i y, parameter = y >= sqrt(3)/2
    ImaginaryAxis,  // z = i y, parameter = y >= 1 (interior symmetry line)
};

// e^{ik theta/2} P(e^{i theta}) on the arc (real by inversion combined with
// reflection); P itself on the other two loci (real Fourier coefficients and
// e^{2 pi i n x} real at x = 0, x = 1/2).  Throws PrecisionError when the
// imaginary residual exceeds 1e-8 relative to the largest term of the
// defining expansion at that height.
double boundary_real_form(const CoefficientTable& table, BoundaryLocus locus, double parameter);

struct BoundaryZero {
    double parameter = 0.0;
    long multiplicity = 1;  // sign scans cannot see even orders
    bool review = false;    // merged from roots closer than 10 * refine_tol
};

// sign-change bracketing over a uniform grid of `resolution` intervals on
// [lo, hi], each bracket refined by bisection to width refine_tol; clusters
// of roots closer than 10 * refine_tol are merged and flagged for review
std::vector<BoundaryZero> scan_boundary_zeros(const CoefficientTable& table, BoundaryLocus locus,
                                              double lo, double hi, long resolution,
                                              double refine_tol = 1e-10);

// Winding number of f (or of the series) around the region boundary,
// counterclockwise, lower edge following y_low(x).  The phase is tracked
// with adaptive subdivision until consecutive increments stay below pi/2;
// if tracking stalls on a suspected on-contour zero the contour is nudged
// inward by 10 * refine_tol and retried once before a NumericError.
long argument_winding(const std::function<LogComplex(const ModularPoint&)>& f,
                      const Region& region, double refine_tol = 1e-10);
long argument_winding(const CoefficientTable& table, const Region& region,
                      double refine_tol = 1e-10);

enum class ZeroLocus { Interior, Arc, VerticalEdge };

struct ZeroRecord {
    ModularPoint point;
    long multiplicity = 1;
    Rational weight = Rational(1);  // 1/2 at i, 1/3 at rho, 1 elsewhere
    ZeroLocus locus = ZeroLocus::Interior;
};

struct ZeroInventory {
    ModularParams params;
    long v_infinity = 0;
    std::vector<ZeroRecord> zeros;
    Rational total_weighted = Rational(0);  // sum of weight * multiplicity
    bool certified = false;                 // valence identity balances exactly
    Rational residual = Rational(0);        // k/12 - v_infinity - total_weighted
    double y_max = 0.0;
};

// smallest height (from a geometric march) at which the table certifies
// |p(v_inf) q^{v_inf}| > sum of everything else, so no zeros lie above it
double suggest_zero_free_height(const CoefficientTable& table);

// Boundary scans, interior winding counts with mirror doubling, elliptic
// weight assignment, and the exact valence balance.  y_max must be certified
// zero-free by the table tails.  The table needs the margin that
// suggest_table_length(params, sqrt(3)/2, tol, 35) provides, so evaluation
// stays certified near zeros where the value is far below the term scale.
ZeroInventory zero_inventory(const CoefficientTable& table, double y_max,
                             double refine_tol = 1e-10);

// Partition of the fundamental domain below y_top into nx columns and ny
// rows: one row hugging the unit circle up to max(1.02, ...), then flat
// rows up to y_top.  Cell areas sum to pi/3 - 1/y_top exactly.
std::vector<Region> partition_fundamental_domain(int nx, int ny, double y_top);

struct EquidistEntry {
    long k = 0;
    long m = 0;
    bool included = false;       // uncertified inventories are excluded
    std::vector<double> scaled;  // (12/k) sum over cell of weight * multiplicity
    double sup_discrepancy = 0.0;
};

struct EquidistReport {
    std::vector<Region> partition;
    std::vector<double> target;  // (3/pi) * hyperbolic cell area
    std::vector<EquidistEntry> entries;
};

// per-cell comparison of the scaled zero counts against the normalized
// hyperbolic measure; inventories that failed certification are excluded
// from the comparison but still listed with included = false
EquidistReport zero_equidist_report(const std::vector<ZeroInventory>& inventories,
                                    const std::vector<Region>& partition);

}  // namespace pklab
