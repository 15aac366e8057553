#include "bvlab/sieve_sets.hpp"

#include "bvlab/ap_stats.hpp"
#include "bvlab/error.hpp"

#include <cmath>

namespace bvlab {

namespace {

struct Progression {
    u64 first = 0;  // 0 when empty
    u64 step = 1;
};

// Members m of the set satisfy m * divisor = residue (mod modulus), which is a
// single progression in m when solvable.
Progression member_progression(const SieveSetSpec& spec) {
    const u64 r = reduce_mod(spec.residue, spec.modulus);
    const u64 g = std::gcd(spec.divisor % spec.modulus, spec.modulus);
    if (r % g != 0) return {};
    const u64 step = spec.modulus / g;
    u64 start = 0;
    if (step > 1) {
        const u64 inv = mod_inverse(static_cast<i64>((spec.divisor / g) % step), step);
        start = mul_mod((r / g) % step, inv, step);
    }
    return {start == 0 ? step : start, step};
}

}  // namespace

SieveSetSpec SieveSetSpec::divided_by(u64 r) const {
    if (r == 0) throw DomainError("divisor must be positive");
    SieveSetSpec out = *this;
    out.divisor = static_cast<u64>(u128{divisor} * r);
    return out;
}

u64 SieveSetSpec::max_member() const {
    if (!(cap >= 1.0)) return 0;
    return static_cast<u64>(std::floor(std::floor(cap) / static_cast<double>(divisor)));
}

bool SieveSetSpec::contains(u64 m) const {
    if (m == 0 || m > max_member()) return false;
    const u128 n = u128{m} * divisor;
    return static_cast<u64>(n % modulus) == reduce_mod(residue, modulus);
}

void SieveSetSpec::for_each(const std::function<void(u64)>& visit) const {
    if (modulus == 0 || divisor == 0) throw DomainError("modulus and divisor must be positive");
    const Progression prog = member_progression(*this);
    if (prog.first == 0) return;
    const u64 top = max_member();
    for (u64 m = prog.first; m <= top; m += prog.step) visit(m);
}

std::size_t SieveSetSpec::cardinality() const {
    const Progression prog = member_progression(*this);
    const u64 top = max_member();
    if (prog.first == 0 || prog.first > top) return 0;
    return static_cast<std::size_t>((top - prog.first) / prog.step + 1);
}

bool is_rough(u64 m, double z, const PrimeStore& store) {
    if (m <= 1) return true;
    for (u64 p : store.primes()) {
        if (static_cast<double>(p) >= z) return true;
        if (p * p > m) return static_cast<double>(m) >= z;  // m is prime
        if (m % p == 0) return false;
    }
    throw OutOfRangeError("prime store too small to sift " + std::to_string(m));
}

std::size_t sifted_count(const SieveSetSpec& spec, double z, const PrimeStore& store) {
    if (!(z >= 1.0)) throw DomainError("sifting level z must be at least 1");
    if (spec.max_member() > store.limit())
        throw OutOfRangeError("sieve set members exceed the prime store limit");
    if (z <= 2.0) return spec.cardinality();
    std::size_t count = 0;
    spec.for_each([&](u64 m) { count += is_rough(m, z, store) ? 1 : 0; });
    return count;
}

BuchstabResult buchstab_residual(const SieveSetSpec& spec, double z_low, double z_high, const PrimeStore& store) {
    if (!(z_low >= 1.0)) throw DomainError("z_low must be at least 1");
    if (z_low > z_high) throw DomainError("z_low exceeds z_high");

    BuchstabResult out;
    out.sifted_high = static_cast<std::int64_t>(sifted_count(spec, z_high, store));
    out.sifted_low = static_cast<std::int64_t>(sifted_count(spec, z_low, store));

    const u64 top = spec.max_member();
    const double hi = std::min(z_high, static_cast<double>(top) + 1.0);
    if (hi > z_low) {
        for (u64 p : store.primes_in_range(z_low, hi)) {
            const SieveSetSpec divided = spec.divided_by(p);
            out.prime_sum += static_cast<std::int64_t>(sifted_count(divided, static_cast<double>(p), store));
            out.prime_sum_low += static_cast<std::int64_t>(sifted_count(divided, z_low, store));
        }
    }
    out.residual = out.sifted_high - (out.sifted_low - out.prime_sum);
    out.residual_low = out.sifted_high - (out.sifted_low - out.prime_sum_low);
    out.second_form_guaranteed = static_cast<double>(top) < z_low * z_low;
    return out;
}

SpiDiscrepancy spi_discrepancy(const PrimeStore& store, double y, const ModulusProfile& profile, i64 residue,
                               double xref) {
    if (std::gcd(reduce_mod(residue, profile.s), profile.s) != 1)
        throw DomainError("residue must be coprime to the modulus");
    if (!(y >= 0.0) || y > xref) throw DomainError("need 0 <= y <= xref");
    if (xref > static_cast<double>(store.limit())) throw OutOfRangeError("xref beyond the prime store limit");

    SpiDiscrepancy out;
    out.lhs = count_primes_in_ap(store, y, profile.s, residue);
    const SieveSetSpec progression{y, profile.s, residue, 1};
    out.rhs = sifted_count(progression, std::sqrt(xref), store);
    out.diff = static_cast<std::int64_t>(out.lhs) - static_cast<std::int64_t>(out.rhs);
    out.budget = std::sqrt(xref) / static_cast<double>(profile.s) + 2.0;
    return out;
}

}  // namespace bvlab
