#pragma once

#include <complex>

#include "pklab/bigfloat.hpp"
#include "pklab/signed_log.hpp"

namespace pklab {

// ln Gamma(x), x > 0
double log_gamma(double x);

// Principal log-Gamma for complex w (continuous branch from Stirling plus
// upward recurrence), needed for Gamma(s/2) inside xi and the closed-form
// Gamma integrals of the unfolded inner product.
std::complex<double> log_gamma_complex(std::complex<double> w);

// J_nu(x) for integer nu >= 0, x >= 0, carried in log scale so the deeply
// suppressed regime x << nu (values like exp(-5e4)) survives.  Backed by the
// extended-precision backend at config().precision_bits.  The BigFloat
// overload takes an exactly-constructed argument (e.g. 4 pi sqrt(mn)/c) so no
// double rounding enters before the Bessel evaluation.
SignedLogReal bessel_j_log(long nu, double x);
SignedLogReal bessel_j_log(long nu, const BigFloat& x);

// K_{it}(y) via int_0^inf exp(-y cosh u) cos(tu) du; real by construction.
// Double-precision trapezoid when the oscillatory cancellation is mild,
// extended-precision otherwise (the integral loses ~pi|t|/2 nats).
double bessel_k_imag(double t, double y);

// zeta(1 + it)
std::complex<double> zeta_line(double t);

// zeta(s) by Euler-Maclaurin; valid and accurate for the strip needed here
// (roughly Re s > -1, |Im s| <= a few hundred), s != 1.
std::complex<double> zeta_em(std::complex<double> s);

// xi(s) = pi^{-s/2} Gamma(s/2) zeta(s), as a log-scale complex number.
LogComplex xi(std::complex<double> s);

// Piecewise envelopes dominating J_nu(nu x) (three branches on [0,1], two on
// [1,inf)), with the junction constants computed from the two continuity
// constraints at construction.
struct EnvelopeParams {
    long nu;
    double x0;    // root of x exp((1-x^2)^{3/2}/3) = 2/e
    double x_nu;  // (1 - nu^{-2/3})^{1/2}
    double y_nu;  // (1 + nu^{-2/3})^{1/2}
    double A1;
    double A2;

    static EnvelopeParams make(long nu);  // requires nu >= 1 (bounds meaningful for nu >= 15)
};

SignedLogReal envelope_f(const EnvelopeParams& p, double x);  // x in [0,1]
double envelope_g(const EnvelopeParams& p, double x);         // x >= 1

}  // namespace pklab
