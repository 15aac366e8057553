#include "bvlab/arith.hpp"

#include "bvlab/error.hpp"

#include <algorithm>
#include <string>

namespace bvlab {

namespace {

constexpr u64 kTrialBound = 1'000'000;

const std::vector<u64>& trial_primes() {
    static const std::vector<u64> primes = [] {
        std::vector<bool> composite(kTrialBound + 1, false);
        std::vector<u64> out;
        for (u64 n = 2; n <= kTrialBound; ++n) {
            if (composite[n]) continue;
            out.push_back(n);
            for (u64 m = n * n; m <= kTrialBound; m += n) composite[m] = true;
        }
        return out;
    }();
    return primes;
}

bool miller_rabin_round(u64 n, u64 d, unsigned r, u64 a) {
    a %= n;
    if (a == 0) return true;
    u64 x = pow_mod(a, d, n);
    if (x == 1 || x == n - 1) return true;
    for (unsigned i = 1; i < r; ++i) {
        x = mul_mod(x, x, n);
        if (x == n - 1) return true;
    }
    return false;
}

// Brent's cycle detection with batched gcds. Returns a non-trivial factor of
// the odd composite n, or n on failure for this seed.
u64 brent_rho(u64 n, u64 c, u64 seed) {
    auto f = [&](u64 v) { return (mul_mod(v, v, n) + c) % n; };
    u64 y = seed % n, g = 1, q = 1, x = 0, ys = 0;
    constexpr u64 batch = 128;
    for (u64 r = 1; g == 1; r <<= 1) {
        x = y;
        for (u64 i = 0; i < r; ++i) y = f(y);
        for (u64 k = 0; k < r && g == 1; k += batch) {
            ys = y;
            for (u64 i = 0; i < std::min(batch, r - k); ++i) {
                y = f(y);
                q = mul_mod(q, x > y ? x - y : y - x, n);
            }
            g = std::gcd(q, n);
        }
        if (r > (u64{1} << 40)) return n;
    }
    if (g == n) {
        do {
            ys = f(ys);
            g = std::gcd(x > ys ? x - ys : ys - x, n);
        } while (g == 1);
    }
    return g;
}

void split_composite(u64 n, std::vector<u64>& out) {
    if (n == 1) return;
    if (is_prime_u64(n)) {
        out.push_back(n);
        return;
    }
    for (u64 c = 1;; ++c) {
        const u64 d = brent_rho(n, c, 2 + c);
        if (d != n && d != 1) {
            split_composite(d, out);
            split_composite(n / d, out);
            return;
        }
    }
}

}  // namespace

u64 pow_mod(u64 base, u64 exp, u64 m) {
    if (m == 1) return 0;
    u64 result = 1;
    base %= m;
    while (exp != 0) {
        if (exp & 1) result = mul_mod(result, base, m);
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    return result;
}

bool is_prime_u64(u64 n) {
    if (n < 2) return false;
    for (u64 p : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37}) {
        if (n % p == 0) return n == p;
    }
    u64 d = n - 1;
    unsigned r = 0;
    while (d % 2 == 0) {
        d /= 2;
        ++r;
    }
    // Bases proven sufficient for all n < 2^64.
    for (u64 a : {2ull, 325ull, 9375ull, 28178ull, 450775ull, 9780504ull, 1795265022ull}) {
        if (!miller_rabin_round(n, d, r, a)) return false;
    }
    return true;
}

Factorization factorize(u64 n) {
    if (n == 0) throw DomainError("cannot factorize 0");
    Factorization f;
    f.n = n;
    u64 m = n;
    std::size_t checked = 0;
    for (u64 p : trial_primes()) {
        if (p * p > m) break;
        if (m % p == 0) {
            unsigned e = 0;
            while (m % p == 0) {
                m /= p;
                ++e;
            }
            f.factors.push_back({p, e});
        }
        // A large prime cofactor would otherwise cost the whole table.
        if (++checked == 200 && m > 1 && is_prime_u64(m)) break;
    }
    if (m == 1) return f;

    std::vector<u64> rest;
    split_composite(m, rest);
    std::sort(rest.begin(), rest.end());
    for (u64 p : rest) {
        if (!f.factors.empty() && f.factors.back().p == p)
            ++f.factors.back().e;
        else
            f.factors.push_back({p, 1});
    }
    return f;
}

u64 radical(const Factorization& f) {
    u64 r = 1;
    for (const auto& [p, e] : f.factors) r *= p;
    return r;
}

u64 radical(u64 n) { return radical(factorize(n)); }

u64 totient(const Factorization& f) {
    u64 t = 1;
    for (const auto& [p, e] : f.factors) {
        t *= p - 1;
        for (unsigned i = 1; i < e; ++i) t *= p;
    }
    return t;
}

ModulusProfile make_profile(u64 s) {
    ModulusProfile profile;
    profile.s = s;
    profile.factorization = factorize(s);
    profile.radical = radical(profile.factorization);
    profile.totient = totient(profile.factorization);
    return profile;
}

u64 mod_inverse(i64 a, u64 m) {
    if (m < 2) throw DomainError("modular inverse needs modulus >= 2");
    // Extended Euclid on signed 128-bit to stay exact for any 64-bit modulus.
    __int128 old_r = reduce_mod(a, m), r = m;
    __int128 old_s = 1, s = 0;
    while (r != 0) {
        const __int128 q = old_r / r;
        std::swap(old_r, r);
        r -= q * old_r;
        std::swap(old_s, s);
        s -= q * old_s;
    }
    if (old_r != 1)
        throw NotInvertibleError(std::to_string(a) + " is not invertible modulo " + std::to_string(m));
    __int128 inv = old_s % static_cast<__int128>(m);
    if (inv < 0) inv += m;
    return static_cast<u64>(inv);
}

Congruence crt_combine(std::span<const Congruence> parts) {
    Congruence acc{0, 1};
    for (const auto& part : parts) {
        if (part.modulus == 0) throw DomainError("CRT modulus must be positive");
        if (std::gcd(acc.modulus, part.modulus) != 1)
            throw DomainError("CRT moduli are not pairwise coprime");
        const u128 product = u128{acc.modulus} * part.modulus;
        if (product > ~u64{0}) throw DomainError("CRT modulus product overflows 64 bits");
        const u64 target = part.residue % part.modulus;
        // acc.residue + acc.modulus * t == target (mod part.modulus)
        u64 t = 0;
        if (part.modulus > 1) {
            const u64 inv = mod_inverse(static_cast<i64>(acc.modulus % part.modulus), part.modulus);
            const u64 diff = (target + part.modulus - acc.residue % part.modulus) % part.modulus;
            t = mul_mod(diff, inv, part.modulus);
        }
        acc.residue = static_cast<u64>(u128{acc.modulus} * t + acc.residue);
        acc.modulus = static_cast<u64>(product);
    }
    return acc;
}

std::vector<u64> divisors(const Factorization& f) {
    std::vector<u64> out{1};
    for (const auto& [p, e] : f.factors) {
        const std::size_t base = out.size();
        u64 pk = 1;
        for (unsigned k = 1; k <= e; ++k) {
            pk *= p;
            for (std::size_t i = 0; i < base; ++i) out.push_back(out[i] * pk);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

Rational Rational::make(u64 num, u64 den) {
    if (den == 0) throw DomainError("rational with zero denominator");
    const u64 g = std::gcd(num, den);
    return g == 0 ? Rational{0, 1} : Rational{num / g, den / g};
}

Rational operator*(Rational a, Rational b) {
    const u64 g1 = std::gcd(a.num, b.den);
    const u64 g2 = std::gcd(b.num, a.den);
    const u128 num = u128{a.num / (g1 ? g1 : 1)} * (b.num / (g2 ? g2 : 1));
    const u128 den = u128{a.den / (g2 ? g2 : 1)} * (b.den / (g1 ? g1 : 1));
    if (num > ~u64{0} || den > ~u64{0}) throw DomainError("rational overflow");
    return Rational::make(static_cast<u64>(num), static_cast<u64>(den));
}

}  // namespace bvlab
