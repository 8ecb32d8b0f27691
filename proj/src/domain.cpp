#include "pklab/domain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "pklab/errors.hpp"
#include "pklab/parallel.hpp"

namespace pklab {

namespace {

// 16-point Gauss-Legendre rule on [-1,1] (positive half; rule is symmetric)
constexpr int kGl = 16;
constexpr double kGlX[8] = {
    0.09501250983763744, 0.28160355077925891, 0.45801677765722739, 0.61787624440264375,
    0.75540440835500303, 0.86563120238783174, 0.94457502307323258, 0.98940093499164993};
constexpr double kGlW[8] = {
    0.18945061045506850, 0.18260341504492359, 0.16915651939500254, 0.14959598881657673,
    0.12462897125553387, 0.09515851168249278, 0.06225352393864789, 0.02715245941175409};

void gl_map(double a, double b, int i, double* node, double* weight) {
    double h = 0.5 * (b - a), c = 0.5 * (a + b);
    if (i < 8) {
        *node = c - h * kGlX[7 - i];
        *weight = h * kGlW[7 - i];
    } else {
        *node = c + h * kGlX[i - 8];
        *weight = h * kGlW[i - 8];
    }
}

}  // namespace

void gl16_map(double a, double b, int i, double* x, double* w) { gl_map(a, b, i, x, w); }

bool ModularPoint::in_fundamental_domain(double slack) const {
    return y > 0.0 && std::fabs(x) <= 0.5 + slack && x * x + y * y >= 1.0 - slack;
}

double Region::y_low(double x) const {
    if (!clipped_by_unit_circle || std::fabs(x) >= 1.0) return y0;
    return std::max(y0, std::sqrt(1.0 - x * x));
}

bool Region::subset_of_fundamental_domain(double slack) const {
    if (x0 < -0.5 - slack || x1 > 0.5 + slack) return false;
    if (clipped_by_unit_circle) return true;
    double xm = (x0 <= 0.0 && x1 >= 0.0) ? 0.0 : std::min(std::fabs(x0), std::fabs(x1));
    return xm * xm + y0 * y0 >= 1.0 - slack;
}

Region make_region(double x0, double x1, double y0, double y1, bool clipped) {
    if (!(x0 < x1) || !(y0 >= 0.0) || !(y0 < y1))
        throw DomainError("make_region: need x0 < x1 and 0 <= y0 < y1");
    Region r;
    r.x0 = x0;
    r.x1 = x1;
    r.y0 = y0;
    r.y1 = y1;
    r.clipped_by_unit_circle = clipped;

    // area = integral over x of max(0, 1/y_low(x) - 1/y1) dx, in closed form:
    // segments where the circle is the lower boundary contribute asin differences.
    double inv_top = std::isinf(y1) ? 0.0 : 1.0 / y1;
    std::vector<double> cuts{x0, x1};
    auto add_cut = [&](double c) {
        if (c > x0 && c < x1) cuts.push_back(c);
    };
    if (clipped && y0 < 1.0) {
        double xc = std::sqrt(1.0 - y0 * y0);
        add_cut(-xc);
        add_cut(xc);
    }
    if (clipped && y1 < 1.0) {
        double xe = std::sqrt(1.0 - y1 * y1);
        add_cut(-xe);
        add_cut(xe);
    }
    std::sort(cuts.begin(), cuts.end());
    double area = 0.0;
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
        double a = cuts[i], b = cuts[i + 1];
        if (!(b > a)) continue;
        double xm = 0.5 * (a + b);
        double lo = r.y_low(xm);
        if (lo >= y1) continue;  // empty slice
        if (clipped && std::fabs(xm) < 1.0 && std::sqrt(1.0 - xm * xm) > y0) {
            area += std::asin(b) - std::asin(a) - (b - a) * inv_top;
        } else {
            area += (b - a) * (1.0 / y0 - inv_top);
        }
    }
    r.hyperbolic_area = area;
    if (!(area >= 0.0) || std::isinf(area))
        throw DomainError("make_region: degenerate or infinite-area region");
    return r;
}

Region fundamental_domain(double y_top) {
    return make_region(-0.5, 0.5, std::sqrt(3.0) / 2.0, y_top, true);
}

namespace {

using Integrand = std::function<std::complex<double>(double, double)>;

// tensor rule on one cell [xa,xb] x [ta,tb] in boundary-conforming coordinates:
// u = A(x) + t (u1 - A(x)) with A(x) = log y_low(x), so the curved lower edge
// maps to t = 0 and the integrand stays smooth across the whole cell
std::complex<double> cell_quad(const Region& r, const Integrand& f, double xa, double xb,
                               double ta, double tb, double u1) {
    std::complex<double> acc(0.0, 0.0);
    for (int ix = 0; ix < kGl; ++ix) {
        double x, wx;
        gl_map(xa, xb, ix, &x, &wx);
        double a = std::log(r.y_low(x));
        double jac = u1 - a;
        if (!(jac > 0.0)) continue;
        std::complex<double> col(0.0, 0.0);
        for (int it = 0; it < kGl; ++it) {
            double t, wt;
            gl_map(ta, tb, it, &t, &wt);
            double y = std::exp(a + t * jac);
            col += wt * jac / y * f(x, y);
        }
        acc += wx * col;
    }
    return acc;
}

std::complex<double> adaptive_cell(const Region& r, const Integrand& f, double xa, double xb,
                                   double ta, double tb, double u1, double eps, int depth,
                                   int max_depth) {
    std::complex<double> whole = cell_quad(r, f, xa, xb, ta, tb, u1);
    double xm = 0.5 * (xa + xb), tm = 0.5 * (ta + tb);
    std::complex<double> split =
        cell_quad(r, f, xa, xm, ta, tm, u1) + cell_quad(r, f, xm, xb, ta, tm, u1) +
        cell_quad(r, f, xa, xm, tm, tb, u1) + cell_quad(r, f, xm, xb, tm, tb, u1);
    double err = std::abs(whole - split);
    if (err <= eps) return split;
    if (depth >= max_depth) {
        if (err > 16.0 * eps)
            throw NumericError("region_integral: quadrature non-convergence at refinement cap");
        return split;
    }
    std::complex<double> acc(0.0, 0.0);
    acc += adaptive_cell(r, f, xa, xm, ta, tm, u1, 0.25 * eps, depth + 1, max_depth);
    acc += adaptive_cell(r, f, xm, xb, ta, tm, u1, 0.25 * eps, depth + 1, max_depth);
    acc += adaptive_cell(r, f, xa, xm, tm, tb, u1, 0.25 * eps, depth + 1, max_depth);
    acc += adaptive_cell(r, f, xm, xb, tm, tb, u1, 0.25 * eps, depth + 1, max_depth);
    return acc;
}

}  // namespace

std::complex<double> region_integral(const Region& region, const Integrand& f,
                                     const QuadSpec& spec) {
    if (std::isinf(region.y1))
        throw DomainError("region_integral: infinite top; truncate the region first");
    double ymin = std::min(region.y_low(region.x0), region.y_low(region.x1));
    double u0 = std::log(ymin), u1 = std::log(region.y1);
    if (!(u1 > u0)) return {0.0, 0.0};

    int nx = spec.base_nx, ny = spec.base_ny;
    if (nx <= 0) nx = 12;
    if (ny <= 0) ny = std::clamp(static_cast<int>(std::ceil((u1 - u0) * 6.0)), 6, 32);

    // split the x-range where the circular arc meets the floor y = y0, so the
    // lower-boundary map A(x) is smooth within every column of cells
    std::vector<double> xs{region.x0};
    if (region.clipped_by_unit_circle && region.y0 < 1.0) {
        double xc = std::sqrt(1.0 - region.y0 * region.y0);
        for (double b : {-xc, xc})
            if (b > region.x0 && b < region.x1) xs.push_back(b);
    }
    xs.push_back(region.x1);
    std::sort(xs.begin(), xs.end());

    std::vector<double> xedges;
    double total_w = region.x1 - region.x0;
    for (size_t s = 0; s + 1 < xs.size(); ++s) {
        double w = xs[s + 1] - xs[s];
        int nseg = std::max(1, static_cast<int>(std::llround(nx * w / total_w)));
        for (int i = 0; i < nseg; ++i)
            xedges.push_back(xs[s] + w * static_cast<double>(i) / nseg);
    }
    xedges.push_back(region.x1);
    long ncols = static_cast<long>(xedges.size()) - 1;

    std::vector<std::complex<double>> rough(static_cast<size_t>(ncols) * ny);
    auto cell_bounds = [&](long idx, double* xa, double* xb, double* ta, double* tb) {
        long i = idx % ncols, j = idx / ncols;
        *xa = xedges[static_cast<size_t>(i)];
        *xb = xedges[static_cast<size_t>(i) + 1];
        *ta = static_cast<double>(j) / ny;
        *tb = static_cast<double>(j + 1) / ny;
    };
    parallel_for(static_cast<long>(rough.size()), [&](long idx) {
        double xa, xb, ta, tb;
        cell_bounds(idx, &xa, &xb, &ta, &tb);
        rough[idx] = cell_quad(region, f, xa, xb, ta, tb, u1);
    });
    double l1 = 0.0;
    for (const auto& v : rough) l1 += std::abs(v);

    // tolerance is relative to the unsigned cell mass, so cancelling
    // integrands do not demand impossible per-cell accuracy
    double scale = std::max(l1, 1e-300);
    double eps_cell = spec.tol * scale / static_cast<double>(rough.size());
    std::vector<std::complex<double>> refined(rough.size());
    parallel_for(static_cast<long>(rough.size()), [&](long idx) {
        double xa, xb, ta, tb;
        cell_bounds(idx, &xa, &xb, &ta, &tb);
        refined[idx] =
            adaptive_cell(region, f, xa, xb, ta, tb, u1, eps_cell, 0, spec.max_refine);
    });
    std::complex<double> total(0.0, 0.0);
    for (const auto& v : refined) total += v;
    return total;
}

double region_integral_real(const Region& region, const std::function<double(double, double)>& f,
                            const QuadSpec& spec) {
    return region_integral(
               region, [&](double x, double y) { return std::complex<double>(f(x, y), 0.0); },
               spec)
        .real();
}

}  // namespace pklab
