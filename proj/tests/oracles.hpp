#pragma once

// Deliberately naive reference implementations. None of these share code with
// the library; they are slow but obviously correct.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <vector>

namespace oracle {

using u64 = std::uint64_t;
using i64 = std::int64_t;

inline bool is_prime(u64 n) {
    if (n < 2) return false;
    for (u64 d = 2; d * d <= n; ++d)
        if (n % d == 0) return false;
    return true;
}

// Trial division by the primes found so far.
inline std::vector<std::uint32_t> primes_upto(u64 limit) {
    std::vector<std::uint32_t> out;
    for (u64 n = 2; n <= limit; ++n) {
        bool prime = true;
        for (std::uint32_t p : out) {
            if (u64{p} * p > n) break;
            if (n % p == 0) {
                prime = false;
                break;
            }
        }
        if (prime) out.push_back(static_cast<std::uint32_t>(n));
    }
    return out;
}

inline u64 smallest_prime_factor(u64 n) {
    for (u64 d = 2; d * d <= n; ++d)
        if (n % d == 0) return d;
    return n;
}

inline std::vector<u64> prime_factors(u64 n) {
    std::vector<u64> out;
    for (u64 d = 2; d * d <= n; ++d)
        while (n % d == 0) {
            out.push_back(d);
            n /= d;
        }
    if (n > 1) out.push_back(n);
    return out;
}

inline u64 phi(u64 n) {
    u64 count = 0;
    for (u64 a = 1; a <= n; ++a) count += std::gcd(a, n) == 1 ? 1 : 0;
    return count;
}

inline u64 radical(u64 n) {
    u64 r = 1;
    u64 last = 0;
    for (u64 p : prime_factors(n)) {
        if (p != last) r *= p;
        last = p;
    }
    return r;
}

inline i64 mod(i64 a, i64 m) { return ((a % m) + m) % m; }

// Ramanujan's series for li(x), minus li(2). Independent of quadrature.
inline double Li(double x) {
    constexpr double euler_gamma = 0.57721566490153286060651209;
    constexpr double li2 = 1.04516378011749278484458888919;
    const double lx = std::log(x);
    double sum = 0.0, term = 1.0, inner = 0.0;
    for (int n = 1; n < 400; ++n) {
        term *= lx / n;  // (log x)^n / n!
        if ((n - 1) % 2 == 0) inner += 1.0 / n;
        const double add = ((n % 2 == 1) ? 1.0 : -1.0) * term / std::pow(2.0, n - 1) * inner;
        sum += add;
        if (n > 10 && std::abs(add) < 1e-18 * std::abs(sum)) break;
    }
    return euler_gamma + std::log(lx) + std::sqrt(x) * sum - li2;
}

// #{n <= y : n = a (mod q), n prime} by checking every n.
inline u64 pi_ap(u64 y, u64 q, u64 a) {
    u64 c = 0;
    for (u64 n = 2; n <= y; ++n)
        if (n % q == a % q && is_prime(n)) ++c;
    return c;
}

// S(M, z) for M = {n/divisor : n <= cap, n = residue (mod modulus), divisor | n}.
inline u64 sifted(u64 cap, u64 modulus, u64 residue, u64 divisor, double z) {
    u64 c = 0;
    for (u64 n = divisor; n <= cap; n += divisor) {
        if (n % modulus != residue % modulus) continue;
        const u64 m = n / divisor;
        if (m == 1 || static_cast<double>(smallest_prime_factor(m)) >= z) ++c;
    }
    return c;
}

// Conductor of a character given by its value table mod q: the least d | q
// with chi(a) = 1 for every unit a = 1 (mod d).
inline u64 conductor(const std::vector<std::complex<double>>& table, u64 q) {
    for (u64 d = 1; d <= q; ++d) {
        if (q % d != 0) continue;
        bool trivial = true;
        for (u64 a = 1; a < q && trivial; ++a)
            if (std::gcd(a, q) == 1 && a % d == 1 % d && std::abs(table[a] - 1.0) > 1e-9) trivial = false;
        if (trivial) return d;
    }
    return q;
}

// Type-I/II sums as literal double loops over (m, n) with the condition on m n.
template <typename A, typename B>
std::complex<double> bilinear(u64 m_lo, u64 m_hi, u64 y, u64 s, u64 q, i64 e, i64 d, A&& a, B&& b) {
    std::complex<double> total = 0.0;
    for (u64 m = m_lo + 1; m <= m_hi; ++m) {
        if (std::gcd(m, q) != 1) continue;
        std::complex<double> first = 0.0, second = 0.0;
        for (u64 n = 1; m * n <= y; ++n) {
            if (static_cast<i64>((m * n) % s) == mod(e, static_cast<i64>(s))) first += b(n);
            if (static_cast<i64>((m * n) % q) == mod(d, static_cast<i64>(q))) second += b(n);
        }
        total += a(m) * (first - static_cast<double>(q) / static_cast<double>(s) * second);
    }
    return total;
}

}  // namespace oracle
