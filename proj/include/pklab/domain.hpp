#pragma once

#include <complex>
#include <functional>

namespace pklab {

// Point x + iy in the upper half-plane.
struct ModularPoint {
    double x = 0.0;
    double y = 1.0;
    // membership in the closed standard fundamental domain |z| >= 1, |Re z| <= 1/2
    bool in_fundamental_domain(double slack = 1e-12) const;
};

// Axis-aligned cell, optionally clipped from below by the unit circle.
// hyperbolic_area is the exact integral of dx dy / y^2 over the clipped cell.
struct Region {
    double x0 = -0.5;
    double x1 = 0.5;
    double y0 = 0.0;
    double y1 = 0.0;  // may be +inf
    bool clipped_by_unit_circle = false;
    double hyperbolic_area = 0.0;

    double y_low(double x) const;  // lower boundary at abscissa x
    bool subset_of_fundamental_domain(double slack = 1e-12) const;
};

Region make_region(double x0, double x1, double y0, double y1, bool clipped);
// the strip |x| <= 1/2 above the unit circle, up to y_top (pass +inf for all of F)
Region fundamental_domain(double y_top);

struct QuadSpec {
    double tol = 1e-8;
    int base_nx = 0;  // 0 = auto
    int base_ny = 0;  // 0 = auto
    int max_refine = 9;
};

// node i (0..15) of the 16-point Gauss-Legendre rule mapped to [a, b]
void gl16_map(double a, double b, int i, double* x, double* w);

// integral of f against the hyperbolic measure dx dy / y^2 over the region,
// adaptive per-cell tensor Gauss-Legendre with deterministic index-ordered
// reduction; throws NumericError when the refinement cap is hit while the
// local error estimate still exceeds budget
std::complex<double> region_integral(const Region& region,
                                     const std::function<std::complex<double>(double, double)>& f,
                                     const QuadSpec& spec);
double region_integral_real(const Region& region,
                            const std::function<double(double, double)>& f,
                            const QuadSpec& spec);

}  // namespace pklab
