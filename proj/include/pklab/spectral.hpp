#pragma once

#include <complex>
#include <functional>

#include "pklab/domain.hpp"
#include "pklab/poincare.hpp"
#include "pklab/signed_log.hpp"

namespace pklab {

// Unitary Eisenstein series E(z, 1/2 + it).  The scattering phase
// xi(2it)/xi(1+2it) equals exp(-2i arg xi(1+2it)) by the functional equation,
// so only xi on the 1-line is ever evaluated.
struct EisensteinSpec {
    double t;
    double tol;

    explicit EisensteinSpec(double t_, double tol_ = 1e-10);
};

// E(z, 1/2+it) = y^{1/2+it} + phi_t y^{1/2-it}
//              + (4 sqrt y / xi(1+2it)) sum_{n>=1} lambda(n) K_{it}(2 pi n y) cos(2 pi n x)
// with lambda(n) = n^{it} sigma_{-2it}(n) real by divisor pairing.
// Requires z.y >= 0.5.
std::complex<double> eisenstein_eval(const EisensteinSpec& spec, const ModularPoint& z);

// int_F (normalized mass density) f dmu over the fundamental domain, top edge
// truncated where the density tail (weighted by the sqrt-y growth envelope of
// f, |f| <= env_sqrt_y * sqrt y on the tail) certifies below the tolerance.
std::complex<double> weighted_density_integral(
    const CoefficientTable& table, const std::function<std::complex<double>(double, double)>& f,
    const QuadSpec& quad, double env_sqrt_y = 3.0);

// <P phi_t, P> / <P, P> by direct fundamental-domain quadrature
std::complex<double> inner_product_direct(const CoefficientTable& table,
                                          const EisensteinSpec& spec, const QuadSpec& quad);

// <P phi_t, P> (unnormalized, log-scale) via the unfolded one-dimensional
// integral int_0^infty (phi_t P)-hat[m](y) e^{-2 pi m y} y^{k-2} dy.  With
// constant_term_only the cusp part of E is suppressed, reducing the integral
// to Gamma closed forms (diagnostic oracle).
LogComplex inner_product_unfolded(const CoefficientTable& table, const EisensteinSpec& spec,
                                  bool constant_term_only = false);

// dense table length inner_product_unfolded needs for the r = m + s convolution
long unfolded_table_length(const ModularParams& params, double t, double tol);

}  // namespace pklab
