#pragma once

#include "bvlab/arith.hpp"
#include "bvlab/prime_store.hpp"

#include <functional>
#include <optional>

namespace bvlab {

/// The set {n / divisor : 1 <= n <= cap, n = residue (mod modulus), divisor | n},
/// never materialised. divisor = 1 gives the undivided progression.
struct SieveSetSpec {
    double cap = 0.0;
    u64 modulus = 1;
    i64 residue = 0;
    u64 divisor = 1;

    /// The divided set obtained by additionally requiring r | m for members m.
    SieveSetSpec divided_by(u64 r) const;

    bool contains(u64 m) const;

    /// Largest possible member, floor(cap / divisor).
    u64 max_member() const;

    /// Visits members in increasing order.
    void for_each(const std::function<void(u64)>& visit) const;

    std::size_t cardinality() const;
};

/// True when m has no prime factor below z (m = 1 qualifies).
bool is_rough(u64 m, double z, const PrimeStore& store);

/// S(M, z) = #{m in M : every prime factor of m is >= z}, by enumeration.
/// Throws OutOfRangeError when members can exceed the store limit.
std::size_t sifted_count(const SieveSetSpec& spec, double z, const PrimeStore& store);

struct BuchstabResult {
    std::int64_t sifted_high = 0;     // S(M, z_high)
    std::int64_t sifted_low = 0;      // S(M, z_low)
    std::int64_t prime_sum = 0;       // sum over z_low <= p < z_high of S(M_p, p)
    std::int64_t prime_sum_low = 0;   // same with S(M_p, z_low)
    std::int64_t residual = 0;        // S(M, z_high) - (S(M, z_low) - prime_sum); always 0
    std::int64_t residual_low = 0;    // second form
    // The second form is exact whenever no member of M_p carries a prime factor
    // in [z_low, p). That is certain when cap / divisor < z_low^2.
    bool second_form_guaranteed = false;
};

/// Buchstab's identity S(M, z2) = S(M, z1) - sum_{z1 <= p < z2} S(M_p, p),
/// together with the variant that sifts every M_p only up to z1.
BuchstabResult buchstab_residual(const SieveSetSpec& spec, double z_low, double z_high, const PrimeStore& store);

struct SpiDiscrepancy {
    u64 lhs = 0;          // pi(y; modulus, residue)
    u64 rhs = 0;          // S({n <= y : n = residue (mod modulus)}, xref^(1/2))
    std::int64_t diff = 0;
    double budget = 0.0;  // xref^(1/2) / modulus + 2

    bool within_budget() const { return static_cast<double>(diff < 0 ? -diff : diff) <= budget; }
};

/// Compares the prime count of a progression with its sifted count at
/// sqrt(xref). Beyond primes below sqrt(xref) in the class, only n = 1 and a
/// single square p^2 = xref at the boundary can differ, hence the slack 2.
/// Requires gcd(residue, modulus) = 1 and y <= xref <= store.limit().
SpiDiscrepancy spi_discrepancy(const PrimeStore& store, double y, const ModulusProfile& profile, i64 residue,
                               double xref);

}  // namespace bvlab
