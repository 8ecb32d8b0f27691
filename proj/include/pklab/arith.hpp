#pragma once

#include <vector>

#include "pklab/rational.hpp"

namespace pklab {

// K(m,n,c) = sum over units x mod c of e((m x + n xbar)/c).  Real because
// x <-> c-x conjugates summands; we sum the paired cosine form directly, so
// residual_imag records what the complex route would have discarded (zero by
// construction here).
struct KloostermanValue {
    double value = 0.0;
    long long modulus = 1;
    double residual_imag = 0.0;
};

// Precomputed machinery for one modulus: unit list with inverses and the
// cosine table cos(2*pi*j/c).  Lets grid drivers amortize the O(c log c)
// setup across many (m,n) pairs.
class KloostermanModulus {
public:
    explicit KloostermanModulus(long long c);  // throws DomainError if c < 1

    long long modulus() const { return c_; }
    double sum(long long m, long long n) const;

private:
    long long c_;
    // x paired with c-x: store (x, xbar) for x < c/2 only
    std::vector<std::pair<long long, long long>> pairs_;
    std::vector<double> cos_table_;
    bool self_paired_ = false;  // c <= 2: the lone unit pairs with itself
};

KloostermanValue kloosterman(long long m, long long n, long long c);

// omega*(n) = sum over primes p | n of w(p), w(2) = 3/2, w(p) = 1 otherwise;
// exact rational to keep 2^{omega*} free of rounding ambiguity.
Rational omega_star(long long n);

std::vector<long long> divisors(long long n);  // ascending
double sigma(double s, long long n);
double sigma_truncated(double s, long long n, double Q);

// exp(B log(x+3) / log log(2x+3)), the sub-polynomial stand-in for x^eps
double epsilon_weight(double B, double x);

long long gcd3(long long a, long long b, long long c);

// inverse of a mod c for gcd(a,c) = 1, c >= 1; result in [0, c)
long long inverse_mod(long long a, long long c);

}  // namespace pklab
