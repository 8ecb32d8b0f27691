#pragma once

#include <cstdint>
#include <numeric>
#include <string>

#include "pklab/errors.hpp"

namespace pklab {

// Exact rational arithmetic for valence bookkeeping (weights 1/2, 1/3, k/12)
// and omega_star values. Denominators stay tiny; int64 with __int128
// intermediates is far more than enough.
struct Rational {
    long long num = 0;
    long long den = 1;  // always > 0, gcd(num, den) == 1

    Rational() = default;
    Rational(long long n) : num(n), den(1) {}
    Rational(long long n, long long d) : num(n), den(d) { normalize(); }

    void normalize() {
        if (den == 0) throw DomainError("rational with zero denominator");
        if (den < 0) { num = -num; den = -den; }
        long long g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) { num /= g; den /= g; }
        if (num == 0) den = 1;
    }

    friend Rational operator+(const Rational& a, const Rational& b) {
        __int128 n = (__int128)a.num * b.den + (__int128)b.num * a.den;
        __int128 d = (__int128)a.den * b.den;
        return make_checked(n, d);
    }
    friend Rational operator-(const Rational& a, const Rational& b) {
        __int128 n = (__int128)a.num * b.den - (__int128)b.num * a.den;
        __int128 d = (__int128)a.den * b.den;
        return make_checked(n, d);
    }
    friend Rational operator*(const Rational& a, const Rational& b) {
        return make_checked((__int128)a.num * b.num, (__int128)a.den * b.den);
    }
    Rational& operator+=(const Rational& o) { return *this = *this + o; }
    Rational& operator-=(const Rational& o) { return *this = *this - o; }

    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num == b.num && a.den == b.den;
    }
    friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
    friend bool operator<(const Rational& a, const Rational& b) {
        return (__int128)a.num * b.den < (__int128)b.num * a.den;
    }

    double to_double() const { return double(num) / double(den); }

    std::string str() const {
        if (den == 1) return std::to_string(num);
        return std::to_string(num) + "/" + std::to_string(den);
    }

private:
    static Rational make_checked(__int128 n, __int128 d) {
        if (d < 0) { n = -n; d = -d; }
        __int128 an = n < 0 ? -n : n;
        // reduce before overflow check
        long long g = (long long)gcd128(an, d);
        if (g > 1) { n /= g; d /= g; }
        if (n > INT64_MAX || n < INT64_MIN || d > INT64_MAX)
            throw DomainError("rational overflow");
        Rational r;
        r.num = (long long)n;
        r.den = (long long)d;
        if (r.den == 0) throw DomainError("rational with zero denominator");
        if (r.num == 0) r.den = 1;
        return r;
    }
    static __int128 gcd128(__int128 a, __int128 b) {
        while (b) { __int128 t = a % b; a = b; b = t; }
        return a < 0 ? -a : a;
    }
};

}  // namespace pklab
