#include "pklab/special.hpp"

#include <mpfr.h>

#include <array>
#include <cmath>

#include "pklab/bigfloat.hpp"
#include "pklab/config.hpp"
#include "pklab/errors.hpp"

namespace pklab {

namespace {

// B_{2r} for 2r = 2..24, exact rationals evaluated in double
constexpr std::array<double, 12> kBernoulli2r = {
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
};

}  // namespace

double log_gamma(double x) {
    if (!(x > 0.0)) throw DomainError("log_gamma: x must be > 0");
    BigFloat bx(x, static_cast<mpfr_prec_t>(config().precision_bits));
    BigFloat r(bx.prec());
    int sign = 0;
    mpfr_lgamma(r.raw(), &sign, bx.raw(), MPFR_RNDN);
    return r.to_double();
}

std::complex<double> log_gamma_complex(std::complex<double> w) {
    if (w.imag() == 0.0 && w.real() <= 0.0 && w.real() == std::floor(w.real()))
        throw DomainError("log_gamma_complex: pole at non-positive integer");
    // lift into the Stirling-safe half plane
    std::complex<double> shift(0.0, 0.0);
    while (w.real() < 12.0) {
        shift += std::log(w);
        w += 1.0;
    }
    std::complex<double> iw = 1.0 / w;
    std::complex<double> iw2 = iw * iw;
    std::complex<double> series(0.0, 0.0);
    std::complex<double> p = iw;
    for (int r = 1; r <= 8; ++r) {
        series += kBernoulli2r[r - 1] / (2.0 * r * (2.0 * r - 1.0)) * p;
        p *= iw2;
    }
    std::complex<double> lg =
        (w - 0.5) * std::log(w) - w + 0.5 * std::log(2.0 * M_PI) + series;
    return lg - shift;
}

SignedLogReal bessel_j_log(long nu, const BigFloat& x) {
    if (nu < 0) throw DomainError("bessel_j_log: nu must be >= 0");
    if (nu > 100000) throw DomainError("bessel_j_log: nu above supported range");
    if (x.sign() < 0) throw DomainError("bessel_j_log: x must be >= 0");
    if (x.is_zero()) return nu == 0 ? SignedLogReal::one() : SignedLogReal::zero();
    BigFloat r(x.prec());
    mpfr_jn(r.raw(), nu, x.raw(), MPFR_RNDN);
    if (r.is_zero()) return SignedLogReal::zero();
    return SignedLogReal::from_log(r.sign(), r.log_abs());
}

SignedLogReal bessel_j_log(long nu, double x) {
    if (x < 0.0) throw DomainError("bessel_j_log: x must be >= 0");
    return bessel_j_log(nu, BigFloat(x, static_cast<mpfr_prec_t>(config().precision_bits)));
}

namespace {

// Trapezoid for int_0^inf exp(-y cosh u) cos(tu) du in double.  The cosh
// already gives double-exponential decay, so the equispaced rule converges
// like exp(-pi^2/h) (up to the exp(|t| pi/2) strip growth).
double k_imag_trapezoid_double(double t, double y) {
    double h = M_PI * M_PI / (40.0 + M_PI * std::fabs(t));
    // cut where the node underdraws the u=0 scale exp(-y) by 47+pi|t|/2 nats
    double ch_max = 1.0 + (std::fabs(t) * M_PI / 2.0 + 47.0) / y;
    double u_max = std::acosh(ch_max);
    double acc = 0.5 * std::exp(-y);  // u = 0 term
    long n = static_cast<long>(u_max / h) + 2;
    for (long j = 1; j <= n; ++j) {
        double u = j * h;
        acc += std::exp(-y * std::cosh(u)) * std::cos(t * u);
    }
    return acc * h;
}

double k_imag_trapezoid_big(double t, double y) {
    double cancel = std::fabs(t) * M_PI / 2.0;
    auto prec = static_cast<mpfr_prec_t>(
        std::max<long>(config().precision_bits, static_cast<long>((cancel + y + 80.0) * 1.45) + 64));
    double h = M_PI * M_PI / (2.0 * cancel + 50.0 + M_PI);
    double ch_max = 1.0 + (cancel + 60.0) / y;
    double u_max = std::acosh(ch_max);
    long n = static_cast<long>(u_max / h) + 2;
    BigFloat by(y, prec), bt(t, prec), bh(h, prec);
    BigFloat acc = exp(-by);
    mpfr_div_ui(acc.raw(), acc.raw(), 2, MPFR_RNDN);
    for (long j = 1; j <= n; ++j) {
        BigFloat u = bh * BigFloat(j, prec);
        BigFloat g = exp(-(by * cosh(u))) * cos(bt * u);
        acc += g;
    }
    return (acc * bh).to_double();
}

}  // namespace

double bessel_k_imag(double t, double y) {
    if (!(y > 0.0)) throw DomainError("bessel_k_imag: y must be > 0");
    if (std::fabs(t) > 100.0) throw DomainError("bessel_k_imag: |t| above supported range");
    if (std::fabs(t) * M_PI / 2.0 <= 25.0) return k_imag_trapezoid_double(t, y);
    return k_imag_trapezoid_big(t, y);
}

std::complex<double> zeta_em(std::complex<double> s) {
    if (s == std::complex<double>(1.0, 0.0)) throw DomainError("zeta: pole at s = 1");
    long N = std::max<long>(50, 2 * static_cast<long>(std::ceil(std::fabs(s.imag()))) + 10);
    std::complex<double> acc(0.0, 0.0);
    for (long j = 1; j < N; ++j) acc += std::exp(-s * std::log(static_cast<double>(j)));
    double lnN = std::log(static_cast<double>(N));
    acc += std::exp((1.0 - s) * lnN) / (s - 1.0);
    std::complex<double> Nms = std::exp(-s * lnN);
    acc += 0.5 * Nms;
    // Euler-Maclaurin corrections: B_{2r}/(2r)! * (s)_{2r-1} * N^{-s-2r+1}
    std::complex<double> poch = s;            // (s)_1
    double fact = 2.0;                        // (2r)!
    std::complex<double> Npow = Nms / static_cast<double>(N);  // N^{-s-1}
    for (int r = 1; r <= 10; ++r) {
        acc += kBernoulli2r[r - 1] / fact * poch * Npow;
        // advance to (s)_{2r+1} and (2r+2)!
        poch *= (s + static_cast<double>(2 * r - 1)) * (s + static_cast<double>(2 * r));
        fact *= (2.0 * r + 1.0) * (2.0 * r + 2.0);
        Npow /= static_cast<double>(N) * static_cast<double>(N);
    }
    return acc;
}

std::complex<double> zeta_line(double t) { return zeta_em({1.0, t}); }

LogComplex xi(std::complex<double> s) {
    if (s == std::complex<double>(0.0, 0.0) || s == std::complex<double>(1.0, 0.0))
        throw DomainError("xi: pole at s in {0, 1}");
    std::complex<double> z = zeta_em(s);
    if (z == std::complex<double>(0.0, 0.0)) return LogComplex::zero();
    std::complex<double> lg = log_gamma_complex(0.5 * s);
    double log_pi = std::log(M_PI);
    double lm = lg.real() - 0.5 * s.real() * log_pi + std::log(std::abs(z));
    double ph = lg.imag() - 0.5 * s.imag() * log_pi + std::arg(z);
    return LogComplex::from_parts(lm, ph);
}

EnvelopeParams EnvelopeParams::make(long nu) {
    if (nu < 1) throw DomainError("envelope: nu must be >= 1");
    // x0: root of ln x + (1-x^2)^{3/2}/3 = ln 2 - 1 in (0.5, 0.7)
    auto F = [](double x) {
        return std::log(x) + std::pow(1.0 - x * x, 1.5) / 3.0 - (std::log(2.0) - 1.0);
    };
    double lo = 0.5, hi = 0.7;
    for (int i = 0; i < 80; ++i) {
        double mid = 0.5 * (lo + hi);
        (F(mid) < 0.0 ? lo : hi) = mid;
    }
    EnvelopeParams p;
    p.nu = nu;
    p.x0 = 0.5 * (lo + hi);
    double t = std::pow(static_cast<double>(nu), -2.0 / 3.0);
    p.x_nu = std::sqrt(1.0 - t);
    p.y_nu = std::sqrt(1.0 + t);
    p.A2 = std::exp(1.0 / 3.0);
    p.A1 = p.A2 * std::pow(1.0 - p.x0 * p.x0, -0.25);
    return p;
}

SignedLogReal envelope_f(const EnvelopeParams& p, double x) {
    if (x < 0.0 || x > 1.0) throw DomainError("envelope_f: x must lie in [0,1]");
    double nu = static_cast<double>(p.nu);
    if (x == 0.0) return SignedLogReal::zero();
    double lm;
    if (x <= p.x0) {
        lm = std::log(p.A1) - 0.5 * std::log(nu) + nu * (1.0 + std::log(0.5 * x));
    } else if (x <= p.x_nu) {
        double om = 1.0 - x * x;
        lm = std::log(p.A2) - 0.5 * std::log(nu) - 0.25 * std::log(om) -
             nu * std::pow(om, 1.5) / 3.0;
    } else {
        lm = -std::log(nu) / 3.0;
    }
    return SignedLogReal::from_log(+1, lm);
}

double envelope_g(const EnvelopeParams& p, double x) {
    if (x < 1.0) throw DomainError("envelope_g: x must be >= 1");
    double nu = static_cast<double>(p.nu);
    if (x <= p.y_nu) return std::pow(nu, -1.0 / 3.0);
    return std::pow(nu, -0.5) * std::pow(x * x - 1.0, -0.25);
}

}  // namespace pklab
