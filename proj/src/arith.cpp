#include "pklab/arith.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "pklab/errors.hpp"

namespace pklab {

long long inverse_mod(long long a, long long c) {
    long long t = 0, new_t = 1;
    long long r = c, new_r = ((a % c) + c) % c;
    while (new_r != 0) {
        long long q = r / new_r;
        t -= q * new_t;
        std::swap(t, new_t);
        r -= q * new_r;
        std::swap(r, new_r);
    }
    if (t < 0) t += c;
    return t;
}

KloostermanModulus::KloostermanModulus(long long c) : c_(c) {
    if (c < 1) throw DomainError("kloosterman: modulus must be >= 1");
    if (c == 1) {
        // single class x = 0, e(0) = 1
        self_paired_ = true;
        pairs_.push_back({0, 0});
        cos_table_.assign(1, 1.0);
        return;
    }
    cos_table_.resize(c_);
    for (long long j = 0; j < c_; ++j)
        cos_table_[j] = std::cos(2.0 * M_PI * static_cast<double>(j) / static_cast<double>(c_));
    if (c == 2) {
        // lone unit x = 1 = c - x
        self_paired_ = true;
        pairs_.push_back({1, 1});
        return;
    }
    // for c > 2 every unit x < c/2 pairs with c-x (x = c/2 is never a unit)
    for (long long x = 1; 2 * x < c_; ++x) {
        if (std::gcd(x, c_) != 1) continue;
        pairs_.push_back({x, inverse_mod(x, c_)});
    }
}

double KloostermanModulus::sum(long long m, long long n) const {
    // canonical argument order so sum(m,n) and sum(n,m) run identical
    // summations; K is symmetric because x <-> xbar permutes the units
    long long mm = m % c_, nn = n % c_;
    if (mm < 0) mm += c_;
    if (nn < 0) nn += c_;
    if (mm > nn) std::swap(mm, nn);
    if (self_paired_) {
        // c = 1: value 1; c = 2: e((m+n)/2) = +-1
        if (c_ == 1) return 1.0;
        return cos_table_[(mm + nn) % 2];
    }
    double acc = 0.0;
    for (const auto& [x, xbar] : pairs_) {
        long long idx = (mm * x + nn * xbar) % c_;
        acc += cos_table_[idx];
    }
    return 2.0 * acc;
}

KloostermanValue kloosterman(long long m, long long n, long long c) {
    if (m < 0 || n < 0) throw DomainError("kloosterman: m, n must be >= 0");
    KloostermanModulus km(c);
    return {km.sum(m, n), c, 0.0};
}

Rational omega_star(long long n) {
    if (n < 1) throw DomainError("omega_star: n must be >= 1");
    Rational r{0, 1};
    if (n % 2 == 0) {
        r = r + Rational{3, 2};
        while (n % 2 == 0) n /= 2;
    }
    for (long long p = 3; p * p <= n; p += 2) {
        if (n % p == 0) {
            r = r + Rational{1, 1};
            while (n % p == 0) n /= p;
        }
    }
    if (n > 1) r = r + Rational{1, 1};
    return r;
}

std::vector<long long> divisors(long long n) {
    if (n < 1) throw DomainError("divisors: n must be >= 1");
    std::vector<long long> small, large;
    for (long long d = 1; d * d <= n; ++d) {
        if (n % d != 0) continue;
        small.push_back(d);
        if (d != n / d) large.push_back(n / d);
    }
    small.insert(small.end(), large.rbegin(), large.rend());
    return small;
}

double sigma(double s, long long n) {
    double acc = 0.0;
    for (long long d : divisors(n)) acc += std::pow(static_cast<double>(d), s);
    return acc;
}

double sigma_truncated(double s, long long n, double Q) {
    double acc = 0.0;
    for (long long d : divisors(n)) {
        if (static_cast<double>(d) > Q) break;
        acc += std::pow(static_cast<double>(d), s);
    }
    return acc;
}

double epsilon_weight(double B, double x) {
    if (x < 0) throw DomainError("epsilon_weight: x must be >= 0");
    return std::exp(B * std::log(x + 3.0) / std::log(std::log(2.0 * x + 3.0)));
}

long long gcd3(long long a, long long b, long long c) {
    return std::gcd(std::gcd(a, b), c);
}

}  // namespace pklab
