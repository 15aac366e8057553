#pragma once

#include "bvlab/arith.hpp"

#include <complex>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace bvlab {

/// exp(2 pi i num / den), kept exact and reduced.
struct RootOfUnity {
    u64 num = 0;
    u64 den = 1;

    static RootOfUnity make(u64 num, u64 den);
    std::complex<double> to_complex() const;

    friend bool operator==(const RootOfUnity&, const RootOfUnity&) = default;
    friend auto operator<=>(const RootOfUnity&, const RootOfUnity&) = default;
};

/// One cyclic factor of (Z/q)^*. Odd prime powers contribute one generator,
/// 4 contributes -1, and 2^k for k >= 3 contributes both -1 and 5.
struct Generator {
    u64 prime = 0;
    unsigned exponent = 0;
    u64 prime_power = 0;
    u64 local = 0;   // generator modulo prime_power
    u64 global = 0;  // CRT lift: local mod prime_power, 1 mod the other parts
    u64 order = 0;
};

class CharacterGroup;

/// A character of a CharacterGroup, identified by its exponent vector against
/// the group's generators.
class CharacterHandle {
public:
    CharacterHandle() = default;

    const CharacterGroup& group() const { return *group_; }
    std::shared_ptr<const CharacterGroup> group_ptr() const { return group_; }
    std::span<const u64> exponents() const { return exponents_; }
    u64 index() const { return index_; }
    u64 modulus() const;
    u64 conductor() const { return conductor_; }
    bool is_primitive() const { return conductor_ == modulus(); }
    bool is_principal() const;

    /// nullopt when gcd(n, q) > 1.
    std::optional<RootOfUnity> exact(i64 n) const;
    std::complex<double> operator()(i64 n) const;

    /// Values at 0..q-1, for tight summation loops.
    std::vector<std::complex<double>> value_table() const;

    /// Multiplicative order of the character.
    u64 order() const;

private:
    friend class CharacterGroup;

    std::shared_ptr<const CharacterGroup> group_;
    std::vector<u64> exponents_;
    u64 index_ = 0;
    u64 conductor_ = 1;
};

/// All phi(q) Dirichlet characters modulo q.
class CharacterGroup : public std::enable_shared_from_this<CharacterGroup> {
public:
    static std::shared_ptr<const CharacterGroup> build(const Factorization& f);

    u64 modulus() const { return modulus_; }
    u64 order() const { return order_; }
    /// Exponent of the group: every character value is a power of exp(2 pi i / exponent()).
    u64 exponent() const { return exponent_; }
    std::span<const Generator> generators() const { return generators_; }
    const Factorization& factorization() const { return factorization_; }

    /// Writes the discrete logarithms of n to `out` (one per generator).
    /// Returns false when gcd(n, q) > 1.
    bool discrete_log(i64 n, std::span<u64> out) const;

    /// Angle of chi(n) as a numerator over exponent(); nullopt when chi(n) = 0.
    std::optional<u64> angle(std::span<const u64> chi, i64 n) const;

    CharacterHandle character(u64 index) const;
    CharacterHandle character(std::span<const u64> exponents) const;
    CharacterHandle principal() const { return character(0); }
    std::vector<CharacterHandle> characters() const;

    CharacterHandle product(const CharacterHandle& a, const CharacterHandle& b) const;
    CharacterHandle conjugate(const CharacterHandle& a) const;

    /// Least d | q from which chi is induced. Tested prime power by prime
    /// power: the p-part is induced from p^m exactly when chi is trivial on
    /// the units = 1 (mod p^m), so m is scanned upward from 0.
    u64 conductor(std::span<const u64> chi) const;

private:
    struct Component;

    CharacterGroup() = default;
    u64 index_of(std::span<const u64> exponents) const;
    std::vector<u64> exponents_of(u64 index) const;
    std::optional<u64> local_angle(const Component& c, std::span<const u64> chi, u64 residue) const;

    u64 modulus_ = 1;
    u64 order_ = 1;
    u64 exponent_ = 1;
    Factorization factorization_;
    std::vector<Generator> generators_;
    std::vector<Component> components_;
};

inline std::shared_ptr<const CharacterGroup> build_character_group(const Factorization& f) {
    return CharacterGroup::build(f);
}
inline std::shared_ptr<const CharacterGroup> build_character_group(u64 q) {
    return CharacterGroup::build(factorize(q));
}

/// Number of primitive characters modulo r (multiplicative; p^k gives
/// phi(p^k) - phi(p^(k-1))).
u64 primitive_count(const Factorization& r);

std::vector<CharacterHandle> primitive_characters(const CharacterGroup& group);

/// Characters modulo s that are not induced from modulo q = rad(s): those
/// whose conductor does not divide q. Throws DomainError if q != rad(s).
std::vector<CharacterHandle> nonlifted_set(const CharacterGroup& group_s, u64 q);
std::vector<CharacterHandle> nonlifted_set(const ModulusProfile& s);

/// Conductors occurring in nonlifted_set: the divisors r of s with r not
/// dividing rad(s) and at least one primitive character. Each such r carries
/// all primitive_count(r) of its primitive characters. Note that q | r fails
/// for some of them once s has two distinct prime factors (s = 12 has r = 4).
std::vector<u64> nonlifted_conductors(const ModulusProfile& s);

}  // namespace bvlab
