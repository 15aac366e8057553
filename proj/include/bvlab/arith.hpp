#pragma once

#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

namespace bvlab {

using u64 = std::uint64_t;
using i64 = std::int64_t;
using u128 = unsigned __int128;

struct PrimePower {
    u64 p;
    unsigned e;

    friend bool operator==(const PrimePower&, const PrimePower&) = default;
};

/// n together with its prime factors in increasing order.
struct Factorization {
    u64 n = 1;
    std::vector<PrimePower> factors;

    friend bool operator==(const Factorization&, const Factorization&) = default;
};

/// An integer s with rad(s) and phi(s) attached.
struct ModulusProfile {
    u64 s = 1;
    Factorization factorization;
    u64 radical = 1;
    u64 totient = 1;
};

inline u64 mul_mod(u64 a, u64 b, u64 m) { return static_cast<u64>(u128{a} * b % m); }
u64 pow_mod(u64 base, u64 exp, u64 m);

/// Deterministic Miller-Rabin, exact for every 64-bit input.
bool is_prime_u64(u64 n);

/// Trial division by the primes below 10^6, then Brent's variant of Pollard
/// rho with a fixed seed schedule. Throws DomainError for n = 0.
Factorization factorize(u64 n);

u64 radical(u64 n);
u64 radical(const Factorization& f);
u64 totient(const Factorization& f);
inline u64 totient(u64 n) { return totient(factorize(n)); }

ModulusProfile make_profile(u64 s);

/// Inverse of a modulo m in [1, m). Requires m >= 2; throws
/// NotInvertibleError when gcd(a, m) > 1.
u64 mod_inverse(i64 a, u64 m);

/// Reduces any signed value into [0, m).
inline u64 reduce_mod(i64 a, u64 m) {
    const i64 mm = static_cast<i64>(m);
    i64 r = a % mm;
    return static_cast<u64>(r < 0 ? r + mm : r);
}

struct Congruence {
    u64 residue;
    u64 modulus;

    friend bool operator==(const Congruence&, const Congruence&) = default;
};

/// Chinese remaindering over pairwise coprime moduli. Throws DomainError on a
/// shared factor or a product overflowing 64 bits.
Congruence crt_combine(std::span<const Congruence> parts);

/// All positive divisors of f.n in increasing order.
std::vector<u64> divisors(const Factorization& f);

/// Exact non-negative rational with 64-bit parts, always reduced.
struct Rational {
    u64 num = 0;
    u64 den = 1;

    static Rational make(u64 num, u64 den);
    double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }

    friend bool operator==(const Rational&, const Rational&) = default;
};

Rational operator*(Rational a, Rational b);

}  // namespace bvlab
