#pragma once

#include <mpfr.h>

#include <cmath>
#include <string>
#include <utility>

namespace pklab {

// Thin RAII wrapper over mpfr_t, rounding MPFR_RNDN throughout.  Used where
// double cannot carry the computation: suppressed Bessel magnitudes, the
// lattice evaluation oracle (absolute accuracy far below the target term),
// and K_{it} in the strongly cancelling regime.
class BigFloat {
public:
    explicit BigFloat(mpfr_prec_t prec = 128) { mpfr_init2(v_, prec); mpfr_set_zero(v_, 1); }
    BigFloat(double x, mpfr_prec_t prec) { mpfr_init2(v_, prec); mpfr_set_d(v_, x, MPFR_RNDN); }
    BigFloat(long x, mpfr_prec_t prec) { mpfr_init2(v_, prec); mpfr_set_si(v_, x, MPFR_RNDN); }
    BigFloat(const BigFloat& o) { mpfr_init2(v_, mpfr_get_prec(o.v_)); mpfr_set(v_, o.v_, MPFR_RNDN); }
    BigFloat(BigFloat&& o) noexcept { mpfr_init2(v_, mpfr_get_prec(o.v_)); mpfr_swap(v_, o.v_); }
    BigFloat& operator=(const BigFloat& o) {
        if (this != &o) { mpfr_set_prec(v_, mpfr_get_prec(o.v_)); mpfr_set(v_, o.v_, MPFR_RNDN); }
        return *this;
    }
    BigFloat& operator=(BigFloat&& o) noexcept { mpfr_swap(v_, o.v_); return *this; }
    ~BigFloat() { mpfr_clear(v_); }

    mpfr_ptr raw() { return v_; }
    mpfr_srcptr raw() const { return v_; }
    mpfr_prec_t prec() const { return mpfr_get_prec(v_); }

    double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }
    bool is_zero() const { return mpfr_zero_p(v_) != 0; }
    int sign() const { return mpfr_sgn(v_); }

    // log|x| at full working precision before the final rounding to double,
    // so magnitudes within 1e-16 of 1 keep their distance from 1 (a mantissa
    // cast to double first would flush log(1 + delta) to 0 for delta below
    // the double epsilon)
    double log_abs() const {
        if (mpfr_zero_p(v_)) return -std::numeric_limits<double>::infinity();
        mpfr_t t;
        mpfr_init2(t, mpfr_get_prec(v_));
        mpfr_abs(t, v_, MPFR_RNDN);
        mpfr_log(t, t, MPFR_RNDN);
        double r = mpfr_get_d(t, MPFR_RNDN);
        mpfr_clear(t);
        return r;
    }

    static mpfr_prec_t result_prec(const BigFloat& a, const BigFloat& b) {
        return std::max(mpfr_get_prec(a.v_), mpfr_get_prec(b.v_));
    }

#define PKLAB_BF_BINOP(op, fn)                                        \
    friend BigFloat operator op(const BigFloat& a, const BigFloat& b) { \
        BigFloat r(result_prec(a, b));                                \
        fn(r.v_, a.v_, b.v_, MPFR_RNDN);                              \
        return r;                                                     \
    }
    PKLAB_BF_BINOP(+, mpfr_add)
    PKLAB_BF_BINOP(-, mpfr_sub)
    PKLAB_BF_BINOP(*, mpfr_mul)
    PKLAB_BF_BINOP(/, mpfr_div)
#undef PKLAB_BF_BINOP

    friend BigFloat operator-(const BigFloat& a) {
        BigFloat r(a.prec());
        mpfr_neg(r.v_, a.v_, MPFR_RNDN);
        return r;
    }
    BigFloat& operator+=(const BigFloat& o) { mpfr_add(v_, v_, o.v_, MPFR_RNDN); return *this; }
    BigFloat& operator-=(const BigFloat& o) { mpfr_sub(v_, v_, o.v_, MPFR_RNDN); return *this; }
    BigFloat& operator*=(const BigFloat& o) { mpfr_mul(v_, v_, o.v_, MPFR_RNDN); return *this; }

    friend bool operator<(const BigFloat& a, const BigFloat& b) { return mpfr_cmp(a.v_, b.v_) < 0; }
    friend bool operator>(const BigFloat& a, const BigFloat& b) { return mpfr_cmp(a.v_, b.v_) > 0; }

#define PKLAB_BF_UNARY(name, fn)                 \
    friend BigFloat name(const BigFloat& a) {    \
        BigFloat r(a.prec());                    \
        fn(r.v_, a.v_, MPFR_RNDN);               \
        return r;                                \
    }
    PKLAB_BF_UNARY(abs, mpfr_abs)
    PKLAB_BF_UNARY(sqrt, mpfr_sqrt)
    PKLAB_BF_UNARY(exp, mpfr_exp)
    PKLAB_BF_UNARY(log, mpfr_log)
    PKLAB_BF_UNARY(cos, mpfr_cos)
    PKLAB_BF_UNARY(sin, mpfr_sin)
    PKLAB_BF_UNARY(cosh, mpfr_cosh)
#undef PKLAB_BF_UNARY

    static BigFloat pi(mpfr_prec_t prec) {
        BigFloat r(prec);
        mpfr_const_pi(r.raw(), MPFR_RNDN);
        return r;
    }

private:
    mpfr_t v_;
};

// Complex number over BigFloat; only the handful of operations the lattice
// oracle needs.
struct BigComplex {
    BigFloat re, im;

    explicit BigComplex(mpfr_prec_t prec = 128) : re(prec), im(prec) {}
    BigComplex(BigFloat r, BigFloat i) : re(std::move(r)), im(std::move(i)) {}
    BigComplex(double r, double i, mpfr_prec_t prec) : re(r, prec), im(i, prec) {}

    mpfr_prec_t prec() const { return std::max(re.prec(), im.prec()); }

    friend BigComplex operator+(const BigComplex& a, const BigComplex& b) {
        return {a.re + b.re, a.im + b.im};
    }
    friend BigComplex operator-(const BigComplex& a, const BigComplex& b) {
        return {a.re - b.re, a.im - b.im};
    }
    friend BigComplex operator*(const BigComplex& a, const BigComplex& b) {
        return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
    }
    friend BigComplex operator/(const BigComplex& a, const BigComplex& b) {
        BigFloat d = b.re * b.re + b.im * b.im;
        return {(a.re * b.re + a.im * b.im) / d, (a.im * b.re - a.re * b.im) / d};
    }

    BigComplex& operator+=(const BigComplex& o) {
        re += o.re;
        im += o.im;
        return *this;
    }

    BigFloat abs2() const { return re * re + im * im; }

    // z^n by binary exponentiation, n >= 0
    static BigComplex pow_int(BigComplex z, unsigned long n) {
        BigComplex r(1.0, 0.0, z.prec());
        while (n) {
            if (n & 1) r = r * z;
            z = z * z;
            n >>= 1;
        }
        return r;
    }

    // exp(i * t)
    static BigComplex cis(const BigFloat& t) { return {cos(t), sin(t)}; }

    // exp(x + i t) for real BigFloat x, t
    static BigComplex exp_complex(const BigFloat& x, const BigFloat& t) {
        BigFloat m = exp(x);
        return {m * cos(t), m * sin(t)};
    }
};

}  // namespace pklab
