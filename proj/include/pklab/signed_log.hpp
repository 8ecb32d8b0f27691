#pragma once

#include <cmath>
#include <complex>
#include <limits>

namespace pklab {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Wrap an angle to (-pi, pi].  remainder() lands in [-pi, pi]; only the
// lower endpoint needs fixing.
inline double wrap_phase(double phi) {
    double w = std::remainder(phi, 2.0 * M_PI);
    if (w <= -M_PI) w = M_PI;
    return w;
}

// log(e^a + e^b) without leaving log scale
inline double log_add_exp(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    double hi = std::max(a, b), lo = std::min(a, b);
    return hi + std::log1p(std::exp(lo - hi));
}

// A real number carried as sign * exp(log_mag).  sign == 0 <=> log_mag == -inf.
// This is the universal carrier for quantities whose magnitude can leave the
// double range (suppressed Bessel values, (n/m)^{(k-1)/2} prefactors, norms).
struct SignedLogReal {
    double log_mag = kNegInf;
    int sign = 0;

    static SignedLogReal zero() { return {}; }
    static SignedLogReal one() { return {0.0, +1}; }

    static SignedLogReal from_double(double x) {
        if (x == 0.0) return zero();
        return {std::log(std::fabs(x)), x > 0 ? +1 : -1};
    }
    static SignedLogReal from_log(int s, double lm) {
        if (s == 0 || lm == kNegInf) return zero();
        return {lm, s > 0 ? +1 : -1};
    }

    bool is_zero() const { return sign == 0; }

    // May overflow to +-inf / underflow to 0; that is the caller's problem.
    double to_double() const {
        if (sign == 0) return 0.0;
        return sign * std::exp(log_mag);
    }

    SignedLogReal operator-() const { return {log_mag, -sign}; }

    friend SignedLogReal operator*(const SignedLogReal& a, const SignedLogReal& b) {
        if (a.sign == 0 || b.sign == 0) return zero();
        return {a.log_mag + b.log_mag, a.sign * b.sign};
    }
    friend SignedLogReal operator/(const SignedLogReal& a, const SignedLogReal& b) {
        if (b.sign == 0) return {std::numeric_limits<double>::infinity(), a.sign ? a.sign : 1};
        if (a.sign == 0) return zero();
        return {a.log_mag - b.log_mag, a.sign * b.sign};
    }

    // |a| <=> |b|
    friend bool abs_less(const SignedLogReal& a, const SignedLogReal& b) {
        return a.log_mag < b.log_mag;
    }

    // Log-safe addition.  When the operands nearly cancel, *cancel_nats
    // receives the number of nats lost (max log_mag minus result log_mag);
    // otherwise it is set to 0.  Total cancellation yields zero() and +inf.
    static SignedLogReal add(const SignedLogReal& a, const SignedLogReal& b,
                             double* cancel_nats = nullptr) {
        if (cancel_nats) *cancel_nats = 0.0;
        if (a.sign == 0) return b;
        if (b.sign == 0) return a;
        const SignedLogReal& hi = (a.log_mag >= b.log_mag) ? a : b;
        const SignedLogReal& lo = (a.log_mag >= b.log_mag) ? b : a;
        double d = lo.log_mag - hi.log_mag;  // <= 0
        if (a.sign == b.sign)
            return {hi.log_mag + std::log1p(std::exp(d)), a.sign};
        if (d == 0.0) {
            if (cancel_nats) *cancel_nats = std::numeric_limits<double>::infinity();
            return zero();
        }
        // expm1 keeps the difference alive when d is below the double
        // epsilon, where exp(d) would round to 1 and flush the result to zero
        double lm = hi.log_mag + std::log(-std::expm1(d));
        if (cancel_nats) *cancel_nats = hi.log_mag - lm;
        return {lm, hi.sign};
    }
};

// A complex number carried as exp(log_mag) * e^{i phase}, phase in (-pi, pi].
struct LogComplex {
    double log_mag = kNegInf;
    double phase = 0.0;

    static LogComplex zero() { return {}; }

    static LogComplex from_complex(const std::complex<double>& z) {
        double m = std::abs(z);
        if (m == 0.0) return zero();
        return {std::log(m), std::arg(z)};
    }
    static LogComplex from_parts(double lm, double phi) {
        if (lm == kNegInf) return zero();
        return {lm, wrap_phase(phi)};
    }
    static LogComplex from_signed(const SignedLogReal& x) {
        if (x.sign == 0) return zero();
        return {x.log_mag, x.sign > 0 ? 0.0 : M_PI};
    }

    bool is_zero() const { return log_mag == kNegInf; }

    std::complex<double> to_complex() const {
        if (is_zero()) return {0.0, 0.0};
        double m = std::exp(log_mag);
        return {m * std::cos(phase), m * std::sin(phase)};
    }

    friend LogComplex operator*(const LogComplex& a, const LogComplex& b) {
        if (a.is_zero() || b.is_zero()) return zero();
        return {a.log_mag + b.log_mag, wrap_phase(a.phase + b.phase)};
    }
    friend LogComplex operator/(const LogComplex& a, const LogComplex& b) {
        if (a.is_zero()) return zero();
        return {a.log_mag - b.log_mag, wrap_phase(a.phase - b.phase)};
    }
};

// Accumulates a sum of LogComplex terms in a floating frame: the running sum
// is kept as a complex<double> relative to a shift so magnitudes far outside
// the double range still add correctly.  Also tracks the largest single term,
// which bounds the rounding noise of the accumulation.
class LogComplexSum {
public:
    void add(const LogComplex& t) {
        if (t.is_zero()) return;
        if (t.log_mag > max_term_log_) max_term_log_ = t.log_mag;
        if (shift_ == kNegInf) {
            shift_ = t.log_mag;
            acc_ = std::polar(1.0, t.phase);
            return;
        }
        if (t.log_mag > shift_ + 1.0) {
            // rescale the frame so exp() below stays comfortably bounded
            double ns = t.log_mag;
            acc_ *= std::exp(shift_ - ns);
            shift_ = ns;
        }
        acc_ += std::polar(std::exp(t.log_mag - shift_), t.phase);
    }

    LogComplex value() const {
        if (shift_ == kNegInf) return LogComplex::zero();
        double m = std::abs(acc_);
        if (m == 0.0) return LogComplex::zero();
        return {shift_ + std::log(m), std::arg(acc_)};
    }

    // log |current partial sum|; -inf when empty or fully cancelled
    double log_abs() const {
        if (shift_ == kNegInf) return kNegInf;
        double m = std::abs(acc_);
        return m == 0.0 ? kNegInf : shift_ + std::log(m);
    }

    double max_term_log() const { return max_term_log_; }

private:
    double shift_ = kNegInf;
    double max_term_log_ = kNegInf;
    std::complex<double> acc_{0.0, 0.0};
};

}  // namespace pklab
