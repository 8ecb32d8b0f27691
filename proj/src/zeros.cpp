#include "pklab/zeros.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "pklab/errors.hpp"
#include "pklab/parallel.hpp"

namespace pklab {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;
const double kRhoY = std::sqrt(3.0) / 2.0;

// log of the largest certified term envelope |p(n)| + tail at height y; the
// natural yardstick for "numerically zero" at that height, stable even where
// the value itself cancels to nothing
double term_scale_log(const CoefficientTable& table, double y) {
    double s = kNegInf;
    for (long n = 1; n <= table.size(); ++n) {
        const CoefficientEntry& e = table.at(n);
        double tl = e.tail_bound > 0.0 ? std::log(e.tail_bound) : kNegInf;
        s = std::max(s, log_add_exp(e.value.log_mag, tl) - kTwoPi * static_cast<double>(n) * y);
    }
    return s;
}

// index of the first Fourier coefficient whose magnitude is certified to
// exceed its truncation tail; this is the vanishing order at the cusp
long first_certified_nonzero(const CoefficientTable& table) {
    for (long n = 1; n <= table.size(); ++n) {
        const CoefficientEntry& e = table.at(n);
        if (e.value.sign == 0) continue;
        double tl = e.tail_bound > 0.0 ? std::log(e.tail_bound) : kNegInf;
        if (e.value.log_mag > tl) return n;
    }
    throw CertificationError("zero inventory: no coefficient certified nonzero in the table");
}

// does |p(v) e^{-2 pi v y}| certifiably dominate the rest of the expansion at
// height y AND at every height above it?  Terms with n > v have ratios that
// shrink as y grows, so checking them at y suffices; a term with n < v would
// eventually overtake the lead instead, so any nonzero envelope below the
// leading index voids the certificate outright.
bool zero_free_at(const CoefficientTable& table, double y, long v) {
    const CoefficientEntry& lead = table.at(v);
    double lead_lo = lead.value.log_mag;
    if (lead.tail_bound > 0.0) {
        double r = std::exp(std::log(lead.tail_bound) - lead.value.log_mag);
        if (r >= 1.0) return false;
        lead_lo += std::log1p(-r);
    }
    lead_lo -= kTwoPi * static_cast<double>(v) * y;

    double rest = kNegInf;
    for (long n = 1; n < v; ++n) {
        const CoefficientEntry& e = table.at(n);
        if (e.value.sign != 0 || e.tail_bound > 0.0) return false;
    }
    for (long n = v + 1; n <= table.size(); ++n) {
        const CoefficientEntry& e = table.at(n);
        double tl = e.tail_bound > 0.0 ? std::log(e.tail_bound) : kNegInf;
        rest = log_add_exp(rest,
                           log_add_exp(e.value.log_mag, tl) - kTwoPi * static_cast<double>(n) * y);
    }
    // remainder past the table from the smooth majorant; the delta at n = m
    // is not covered by it, so add that term when the table stops short of m
    if (table.params.m > table.size())
        rest = log_add_exp(rest, -kTwoPi * static_cast<double>(table.params.m) * y);
    CoeffMajorant env = coeff_majorant(table.params);
    double delta = std::min(0.05, M_PI * y);
    long n0 = table.size() + 1;
    for (long guard = 0; guard < 10000000; ++guard, ++n0) {
        double nn = static_cast<double>(n0);
        double cur = env(nn) - kTwoPi * nn * y;
        double ratio = env(nn + 1.0) - kTwoPi * (nn + 1.0) * y - cur;
        if (ratio < -delta) {
            rest = log_add_exp(rest, log_add_exp(cur, cur + ratio - std::log1p(-std::exp(ratio))));
            return lead_lo > rest;
        }
        rest = log_add_exp(rest, cur);
    }
    throw NumericError("zero_free_at: majorant remainder did not settle");
}

}  // namespace

double suggest_zero_free_height(const CoefficientTable& table) {
    long v = first_certified_nonzero(table);
    double y = 1.0;
    while (!zero_free_at(table, y, v)) {
        y *= 1.05;
        if (y > 64.0)
            throw CertificationError(
                "suggest_zero_free_height: leading term never certifiably dominates");
    }
    return y;
}

double boundary_real_form(const CoefficientTable& table, BoundaryLocus locus, double parameter) {
    ModularPoint z;
    double rot = 0.0;
    switch (locus) {
        case BoundaryLocus::Arc:
            if (!(parameter >= M_PI / 3.0 - 1e-12 && parameter <= M_PI / 2.0 + 1e-12))
                throw DomainError("boundary_real_form: arc angle outside [pi/3, pi/2]");
            z = ModularPoint{std::cos(parameter), std::sin(parameter)};
            rot = 0.5 * static_cast<double>(table.params.k) * parameter;
            break;
        case BoundaryLocus::VerticalEdge:
            if (!(parameter >= kRhoY - 1e-12))
                throw DomainError("boundary_real_form: edge height below the corner");
            z = ModularPoint{0.5, parameter};
            break;
        case BoundaryLocus::ImaginaryAxis:
            if (!(parameter >= 1.0 - 1e-12))
                throw DomainError("boundary_real_form: axis height below the corner");
            z = ModularPoint{0.0, parameter};
            break;
    }
    LogComplex val = evaluate(table, z);
    if (val.is_zero()) return 0.0;
    double psi = val.phase + rot;
    // the imaginary part must be noise relative to the largest series term;
    // measuring against |value| instead would blow up exactly at the zeros
    // this function exists to find
    double resid_log = val.log_mag + std::log(std::fabs(std::sin(psi)));
    if (resid_log > std::log(1e-8) + term_scale_log(table, z.y))
        throw PrecisionError("boundary_real_form: imaginary residual exceeds the symmetry budget");
    return std::exp(val.log_mag) * std::cos(psi);
}

std::vector<BoundaryZero> scan_boundary_zeros(const CoefficientTable& table, BoundaryLocus locus,
                                              double lo, double hi, long resolution,
                                              double refine_tol) {
    if (resolution < 100) throw DomainError("scan_boundary_zeros: resolution must be >= 100");
    if (!(lo < hi)) throw DomainError("scan_boundary_zeros: empty parameter interval");
    if (!(refine_tol > 0.0)) throw DomainError("scan_boundary_zeros: refine_tol must be positive");

    auto f = [&](double t) { return boundary_real_form(table, locus, t); };
    auto grid = [&](long i) {
        return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(resolution);
    };
    std::vector<double> val(static_cast<size_t>(resolution) + 1);
    parallel_for(static_cast<size_t>(resolution) + 1,
                 [&](size_t i) { val[i] = f(grid(static_cast<long>(i))); });

    std::vector<double> roots;
    for (long i = 0; i <= resolution; ++i)
        if (val[static_cast<size_t>(i)] == 0.0) roots.push_back(grid(i));
    for (long i = 0; i < resolution; ++i) {
        double fa = val[static_cast<size_t>(i)], fb = val[static_cast<size_t>(i) + 1];
        if (fa == 0.0 || fb == 0.0 || (fa < 0.0) == (fb < 0.0)) continue;
        double xa = grid(i), xb = grid(i + 1);
        bool neg_left = fa < 0.0;
        while (xb - xa > refine_tol) {
            double xm = 0.5 * (xa + xb);
            double fm = f(xm);
            if (fm == 0.0) {
                xa = xm;
                xb = xm;
                break;
            }
            if ((fm < 0.0) == neg_left)
                xa = xm;
            else
                xb = xm;
        }
        roots.push_back(0.5 * (xa + xb));
    }
    std::sort(roots.begin(), roots.end());

    std::vector<BoundaryZero> out;
    for (double r : roots) {
        if (!out.empty() && r - out.back().parameter < 10.0 * refine_tol)
            out.back().review = true;  // unresolved cluster, merged
        else
            out.push_back(BoundaryZero{r, 1, false});
    }
    return out;
}

namespace {

// raised when phase tracking cannot certify steps below pi/2, i.e. the
// contour runs too close to (or through) a zero
struct ContourStall {};

double phase_or_stall(const std::function<LogComplex(const ModularPoint&)>& f,
                      const ModularPoint& z) {
    LogComplex v = f(z);
    if (v.is_zero()) throw ContourStall{};
    return v.phase;
}

// unwrapped phase increment of f along curve(t) for t in [t0, t1], subdividing
// until every step is certifiably a principal branch step (< pi/2)
double phase_increment(const std::function<LogComplex(const ModularPoint&)>& f,
                       const std::function<ModularPoint(double)>& curve, double t0, double p0,
                       double t1, double p1, int depth) {
    double d = std::remainder(p1 - p0, kTwoPi);
    if (std::fabs(d) <= M_PI / 2.0) return d;
    if (depth > 45) throw ContourStall{};
    double tm = 0.5 * (t0 + t1);
    double pm = phase_or_stall(f, curve(tm));
    return phase_increment(f, curve, t0, p0, tm, pm, depth + 1) +
           phase_increment(f, curve, tm, pm, t1, p1, depth + 1);
}

// winding of f around the region boundary, traversed counterclockwise with
// the lower edge lifted by `lift` above y_low(x)
long winding_core(const std::function<LogComplex(const ModularPoint&)>& f, const Region& region,
                  double lift, long base_segments) {
    using Curve = std::function<ModularPoint(double)>;
    const double x0 = region.x0, x1 = region.x1, y1 = region.y1;
    const double yb0 = region.y_low(x0) + lift;
    const double yb1 = region.y_low(x1) + lift;
    if (!(yb0 < y1 && yb1 < y1))
        throw DomainError("argument_winding: lifted lower edge meets the top");
    std::vector<Curve> edges;
    edges.push_back([&region, lift, x0, x1](double t) {
        double x = x0 + (x1 - x0) * t;
        return ModularPoint{x, region.y_low(x) + lift};
    });
    edges.push_back([x1, yb1, y1](double t) { return ModularPoint{x1, yb1 + (y1 - yb1) * t}; });
    edges.push_back([x0, x1, y1](double t) { return ModularPoint{x1 - (x1 - x0) * t, y1}; });
    edges.push_back([x0, yb0, y1](double t) { return ModularPoint{x0, y1 - (y1 - yb0) * t}; });

    double total = 0.0;
    for (const Curve& edge : edges) {
        double tprev = 0.0;
        double pprev = phase_or_stall(f, edge(0.0));
        for (long j = 1; j <= base_segments; ++j) {
            double t = static_cast<double>(j) / static_cast<double>(base_segments);
            double p = phase_or_stall(f, edge(t));
            total += phase_increment(f, edge, tprev, pprev, t, p, 0);
            tprev = t;
            pprev = p;
        }
    }
    long w = std::lround(total / kTwoPi);
    if (std::fabs(total - kTwoPi * static_cast<double>(w)) > 0.5)
        throw NumericError("argument_winding: accumulated phase is not a multiple of 2 pi");
    return w;
}

long winding_retry(const std::function<LogComplex(const ModularPoint&)>& f, const Region& region,
                   double lift, double refine_tol, long base_segments) {
    try {
        return winding_core(f, region, lift, base_segments);
    } catch (const ContourStall&) {
        // suspected zero on (or hugging) the contour: pull every edge inward
        // by one margin unit and try once more
        double d = std::max(10.0 * refine_tol, 1e-12);
        if (region.x1 - region.x0 <= 3.0 * d || region.y1 - region.y0 <= 3.0 * d)
            throw NumericError("argument_winding: zero pinned to an irreducibly small contour");
        Region shrunk = make_region(region.x0 + d, region.x1 - d, region.y0, region.y1 - d,
                                    region.clipped_by_unit_circle);
        try {
            return winding_core(f, shrunk, lift + d, base_segments);
        } catch (const ContourStall&) {
            throw NumericError("argument_winding: phase tracking stalled twice on the contour");
        }
    }
}

}  // namespace

long argument_winding(const std::function<LogComplex(const ModularPoint&)>& f,
                      const Region& region, double refine_tol) {
    if (!(refine_tol > 0.0)) throw DomainError("argument_winding: refine_tol must be positive");
    if (!std::isfinite(region.y1)) throw DomainError("argument_winding: region must be bounded");
    return winding_retry(f, region, 0.0, refine_tol, 8);
}

long argument_winding(const CoefficientTable& table, const Region& region, double refine_tol) {
    auto f = [&table](const ModularPoint& z) { return evaluate(table, z); };
    return argument_winding(f, region, refine_tol);
}

namespace {

// Recursively bisect a cell of known winding w > 0 until it is smaller than
// the localization target, then emit its center with multiplicity w.  Each
// cut is validated by w_left + w_right == w; a zero sitting on the cut makes
// the counts disagree, in which case a golden-ratio cut is tried before
// giving up.
void localize_interior(const std::function<LogComplex(const ModularPoint&)>& f, const Region& cell,
                       double lift, long w, double refine_tol,
                       std::vector<std::pair<ModularPoint, long>>& out) {
    if (w <= 0) return;
    const double target = 1e-4;
    double dx = cell.x1 - cell.x0;
    double ylo = std::min(cell.y_low(cell.x0), cell.y_low(cell.x1)) + lift;
    double dy = cell.y1 - ylo;
    if (dx <= target && dy <= target) {
        out.push_back({ModularPoint{0.5 * (cell.x0 + cell.x1), 0.5 * (ylo + cell.y1)}, w});
        return;
    }
    // clipped cells split in x first so that any horizontal cut stays above
    // the circle across the whole (by then thin) cell
    bool split_x = (cell.clipped_by_unit_circle && dx > target) || (dx >= dy);
    for (double frac : {0.5, 0.6180339887498949}) {
        Region a, b;
        double la = lift, lb = lift;
        if (split_x) {
            double xm = cell.x0 + frac * dx;
            a = make_region(cell.x0, xm, cell.y0, cell.y1, cell.clipped_by_unit_circle);
            b = make_region(xm, cell.x1, cell.y0, cell.y1, cell.clipped_by_unit_circle);
        } else {
            double ytop = std::max(cell.y_low(cell.x0), cell.y_low(cell.x1)) + lift;
            double ym = ytop + frac * (cell.y1 - ytop);
            a = make_region(cell.x0, cell.x1, cell.y0, ym, cell.clipped_by_unit_circle);
            b = make_region(cell.x0, cell.x1, ym, cell.y1, false);
            lb = 0.0;
        }
        long wa = winding_retry(f, a, la, refine_tol, 8);
        long wb = winding_retry(f, b, lb, refine_tol, 8);
        if (wa + wb == w) {
            localize_interior(f, a, la, wa, refine_tol, out);
            localize_interior(f, b, lb, wb, refine_tol, out);
            return;
        }
    }
    throw NumericError("zero localization: winding counts inconsistent across a cut");
}

}  // namespace

ZeroInventory zero_inventory(const CoefficientTable& table, double y_max, double refine_tol) {
    const ModularParams& p = table.params;
    if (!(refine_tol > 0.0 && refine_tol <= 1e-6))
        throw DomainError("zero_inventory: refine_tol out of (0, 1e-6]");
    if (!(y_max >= 1.1) || !std::isfinite(y_max))
        throw DomainError("zero_inventory: y_max must be finite and >= 1.1");
    long need = suggest_table_length(p, kRhoY, table.target_tol, 35.0);
    if (table.size() < need)
        throw TableTooShortError("zero_inventory: table lacks the near-zero evaluation margin",
                                 table.size());

    ZeroInventory inv{p, 0, {}, Rational(0), false, Rational(0), y_max};
    long v = first_certified_nonzero(table);
    inv.v_infinity = v;
    if (!zero_free_at(table, y_max, v))
        throw CertificationError("zero_inventory: table tails do not certify y_max zero-free");

    long idx_i = -1, idx_rho = -1;
    auto push = [&inv](ModularPoint pt, long mult, Rational weight, ZeroLocus locus) {
        inv.zeros.push_back(ZeroRecord{pt, mult, weight, locus});
        inv.total_weighted += weight * Rational(mult);
        return static_cast<long>(inv.zeros.size()) - 1;
    };

    // --- boundary loci -----------------------------------------------------
    const double th0 = M_PI / 3.0, th1 = M_PI / 2.0;
    long res = std::max<long>(400, (p.k / 12 + 2) * 48);
    auto arc = scan_boundary_zeros(table, BoundaryLocus::Arc, th0, th1, res, refine_tol);
    auto edge = scan_boundary_zeros(table, BoundaryLocus::VerticalEdge, kRhoY, y_max, res,
                                    refine_tol);
    auto axis =
        scan_boundary_zeros(table, BoundaryLocus::ImaginaryAxis, 1.0, y_max, res, refine_tol);

    // elliptic corners: compare the endpoint values against the arc scale
    double arc_scale = 0.0;
    for (int j = 0; j <= 48; ++j) {
        double th = th0 + (th1 - th0) * j / 48.0;
        arc_scale = std::max(arc_scale, std::fabs(boundary_real_form(table, BoundaryLocus::Arc, th)));
    }
    if (arc_scale == 0.0)
        throw NumericError("zero_inventory: series vanishes along the whole arc sample");
    bool zero_at_i =
        std::fabs(boundary_real_form(table, BoundaryLocus::Arc, th1)) < 1e-6 * arc_scale;
    bool zero_at_rho =
        std::fabs(boundary_real_form(table, BoundaryLocus::Arc, th0)) < 1e-6 * arc_scale;
    if (zero_at_i) idx_i = push(ModularPoint{0.0, 1.0}, 1, Rational(1, 2), ZeroLocus::Arc);
    if (zero_at_rho) idx_rho = push(ModularPoint{0.5, kRhoY}, 1, Rational(1, 3), ZeroLocus::Arc);

    // the corners belong to the elliptic bookkeeping above; everything else
    // on the scans enters with weight 1, counted once per orbit
    const double end_eps = 1e-6;
    for (const auto& r : arc)
        if (r.parameter > th0 + end_eps && r.parameter < th1 - end_eps)
            push(ModularPoint{std::cos(r.parameter), std::sin(r.parameter)}, r.multiplicity,
                 Rational(1), ZeroLocus::Arc);
    for (const auto& r : edge)
        if (r.parameter > kRhoY + end_eps)
            push(ModularPoint{0.5, r.parameter}, r.multiplicity, Rational(1),
                 ZeroLocus::VerticalEdge);
    for (const auto& r : axis)
        if (r.parameter > 1.0 + end_eps)
            push(ModularPoint{0.0, r.parameter}, r.multiplicity, Rational(1), ZeroLocus::Interior);

    // --- interior: winding over the right half, mirrored -------------------
    auto fev = [&table](const ModularPoint& z) { return evaluate(table, z); };
    double mrg = std::max(1e-6, 20.0 * refine_tol);
    const int ncols = 3;
    const double ysplit = 1.05;
    std::vector<double> xe(ncols + 1);
    for (int j = 0; j <= ncols; ++j)
        xe[static_cast<size_t>(j)] = mrg + (0.5 - 2.0 * mrg) * j / ncols;

    std::vector<std::pair<Region, double>> cells;
    for (int j = 0; j < ncols; ++j)
        cells.push_back({make_region(xe[static_cast<size_t>(j)], xe[static_cast<size_t>(j) + 1],
                                     0.8, ysplit, true),
                         mrg});
    int nrows = std::max(1, static_cast<int>(std::ceil((y_max - ysplit) / 0.35)));
    for (int r = 0; r < nrows; ++r) {
        double ya = ysplit + (y_max - ysplit) * r / nrows;
        double yb = ysplit + (y_max - ysplit) * (r + 1) / nrows;
        for (int j = 0; j < ncols; ++j)
            cells.push_back({make_region(xe[static_cast<size_t>(j)],
                                         xe[static_cast<size_t>(j) + 1], ya, yb, false),
                             0.0});
    }
    std::vector<std::pair<ModularPoint, long>> pts;
    for (const auto& [cell, lift] : cells) {
        long w = winding_retry(fev, cell, lift, refine_tol, 8);
        if (w > 0) localize_interior(fev, cell, lift, w, refine_tol, pts);
    }
    for (const auto& [pt, mult] : pts) {
        push(pt, mult, Rational(1), ZeroLocus::Interior);
        push(ModularPoint{-pt.x, pt.y}, mult, Rational(1), ZeroLocus::Interior);
    }

    // --- valence balance ----------------------------------------------------
    // sign scans see odd orders only and the corner detection sees order >= 1;
    // whatever multiplicity is missing must sit at the located elliptic points,
    // constrained by 6 v_i + 4 v_rho == k (mod 12), i.e. v_i has the parity of
    // k/2 and v_rho the residue of k mod 3.  A unique consistent assignment is
    // applied; anything else leaves the inventory uncertified.
    Rational target(p.k, 12);
    Rational res0 = target - Rational(v) - inv.total_weighted;
    if (Rational(0) < res0 && (idx_i >= 0 || idx_rho >= 0)) {
        std::vector<std::pair<long, long>> sols;
        long di_max = idx_i >= 0 ? 2 * (p.k / 12 + 1) : 0;
        for (long di = 0; di <= di_max; ++di) {
            Rational rem = res0 - Rational(di, 2);
            if (rem < Rational(0)) break;
            if ((3 * rem.num) % rem.den != 0) continue;
            long dr = 3 * rem.num / rem.den;
            if (dr > 0 && idx_rho < 0) continue;
            long vi = (idx_i >= 0 ? 1 : 0) + di;
            long vr = (idx_rho >= 0 ? 1 : 0) + dr;
            if (vi % 2 != (p.k / 2) % 2) continue;
            if (vr % 3 != p.k % 3) continue;
            sols.push_back({di, dr});
        }
        if (sols.size() == 1) {
            auto [di, dr] = sols.front();
            if (di > 0) {
                inv.zeros[static_cast<size_t>(idx_i)].multiplicity += di;
                inv.total_weighted += Rational(di, 2);
            }
            if (dr > 0) {
                inv.zeros[static_cast<size_t>(idx_rho)].multiplicity += dr;
                inv.total_weighted += Rational(dr, 3);
            }
        }
    }
    inv.residual = target - Rational(v) - inv.total_weighted;
    inv.certified = inv.residual == Rational(0);
    return inv;
}

std::vector<Region> partition_fundamental_domain(int nx, int ny, double y_top) {
    if (nx < 1 || ny < 2) throw DomainError("partition_fundamental_domain: need nx >= 1, ny >= 2");
    if (!(y_top > 1.2) || !std::isfinite(y_top))
        throw DomainError("partition_fundamental_domain: y_top must be finite and > 1.2");
    const double y_knee = 1.02;  // first row hugs the circle up to here
    std::vector<Region> cells;
    auto xa = [&](int j) { return -0.5 + 1.0 * j / nx; };
    for (int j = 0; j < nx; ++j) cells.push_back(make_region(xa(j), xa(j + 1), 0.8, y_knee, true));
    for (int r = 1; r < ny; ++r) {
        double ya = y_knee + (y_top - y_knee) * (r - 1) / (ny - 1);
        double yb = y_knee + (y_top - y_knee) * r / (ny - 1);
        for (int j = 0; j < nx; ++j) cells.push_back(make_region(xa(j), xa(j + 1), ya, yb, false));
    }
    return cells;
}

EquidistReport zero_equidist_report(const std::vector<ZeroInventory>& inventories,
                                    const std::vector<Region>& partition) {
    if (partition.empty()) throw DomainError("zero_equidist_report: empty partition");
    EquidistReport rep;
    rep.partition = partition;
    rep.target.reserve(partition.size());
    for (const Region& cell : partition) rep.target.push_back(3.0 / M_PI * cell.hyperbolic_area);

    for (const ZeroInventory& inv : inventories) {
        EquidistEntry ent;
        ent.k = inv.params.k;
        ent.m = inv.params.m;
        ent.included = inv.certified;
        if (ent.included) {
            ent.scaled.assign(partition.size(), 0.0);
            double scale = 12.0 / static_cast<double>(inv.params.k);
            for (const ZeroRecord& zr : inv.zeros) {
                double x = std::min(zr.point.x, 0.5 - 1e-12);  // fold the shared edge inward
                for (size_t c = 0; c < partition.size(); ++c) {
                    const Region& cell = partition[c];
                    if (x < cell.x0 || x >= cell.x1) continue;
                    if (zr.point.y >= cell.y1 || zr.point.y < cell.y_low(x) - 1e-9) continue;
                    ent.scaled[c] +=
                        scale * zr.weight.to_double() * static_cast<double>(zr.multiplicity);
                    break;
                }
            }
            for (size_t c = 0; c < partition.size(); ++c)
                ent.sup_discrepancy =
                    std::max(ent.sup_discrepancy, std::fabs(ent.scaled[c] - rep.target[c]));
        }
        rep.entries.push_back(std::move(ent));
    }
    return rep;
}

}  // namespace pklab
