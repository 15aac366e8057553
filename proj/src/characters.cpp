#include "bvlab/characters.hpp"

#include "bvlab/error.hpp"

#include <cmath>
#include <numbers>
#include <unordered_map>

namespace bvlab {

namespace {

constexpr u64 kTableThreshold = u64{1} << 22;
constexpr std::uint32_t kNotUnit = 0xFFFFFFFFu;

u64 lcm(u64 a, u64 b) { return a / std::gcd(a, b) * b; }

u64 primitive_root_mod_prime(u64 p) {
    if (p == 2) return 1;
    const auto f = factorize(p - 1);
    for (u64 g = 2;; ++g) {
        bool ok = true;
        for (const auto& [r, e] : f.factors) {
            if (pow_mod(g, (p - 1) / r, p) == 1) {
                ok = false;
                break;
            }
        }
        if (ok) return g;
    }
}

// Baby-step giant-step: smallest x in [0, order) with g^x = h (mod m).
std::optional<u64> bsgs(u64 g, u64 h, u64 order, u64 m) {
    const auto step = static_cast<u64>(std::ceil(std::sqrt(static_cast<double>(order))));
    std::unordered_map<u64, u64> baby;
    baby.reserve(step * 2);
    u64 cur = 1;
    for (u64 j = 0; j < step; ++j) {
        baby.emplace(cur, j);
        cur = mul_mod(cur, g, m);
    }
    const u64 giant = pow_mod(mod_inverse(static_cast<i64>(g), m), step, m);
    u64 gamma = h % m;
    for (u64 i = 0; i <= step; ++i) {
        if (auto it = baby.find(gamma); it != baby.end()) {
            const u64 x = i * step + it->second;
            if (x < order) return x;
        }
        gamma = mul_mod(gamma, giant, m);
    }
    return std::nullopt;
}

}  // namespace

RootOfUnity RootOfUnity::make(u64 num, u64 den) {
    if (den == 0) throw DomainError("root of unity with zero denominator");
    num %= den;
    const u64 g = std::gcd(num, den);
    return num == 0 ? RootOfUnity{0, 1} : RootOfUnity{num / g, den / g};
}

std::complex<double> RootOfUnity::to_complex() const {
    if (num == 0) return {1.0, 0.0};
    if (2 * num == den) return {-1.0, 0.0};
    if (4 * num == den) return {0.0, 1.0};
    if (4 * num == 3 * den) return {0.0, -1.0};
    // Use the representative in (-1/2, 1/2] of a turn.
    const double turns = 2 * num > den ? -static_cast<double>(den - num) / static_cast<double>(den)
                                       : static_cast<double>(num) / static_cast<double>(den);
    return std::polar(1.0, 2.0 * std::numbers::pi * turns);
}

struct CharacterGroup::Component {
    u64 prime = 0;
    unsigned exponent = 0;
    u64 prime_power = 0;
    std::size_t first = 0;  // first generator index
    std::size_t count = 0;  // generators owned by this component
    // Odd p and 4: log of the generator. 2^k, k >= 3: 2 * log_5(+-n) + [n = 3 (mod 4)].
    std::vector<std::uint32_t> table;

    // Fills logs[0..count) for a unit residue modulo prime_power.
    bool logs(u64 residue, const std::vector<Generator>& gens, u64* out) const {
        residue %= prime_power;
        if (count == 0) return residue % prime != 0 || prime_power == 1;
        if (residue % prime == 0) return false;
        if (!table.empty()) {
            const std::uint32_t v = table[residue];
            if (v == kNotUnit) return false;
            if (count == 1) {
                out[0] = v;
            } else {
                out[0] = v & 1u;
                out[1] = v >> 1;
            }
            return true;
        }
        const Generator& g0 = gens[first];
        if (count == 1) {
            auto x = bsgs(g0.local, residue, g0.order, prime_power);
            if (!x) throw Error("discrete logarithm failed");
            out[0] = *x;
            return true;
        }
        const bool minus = residue % 4 == 3;
        const u64 positive = minus ? prime_power - residue : residue;
        const Generator& g1 = gens[first + 1];
        auto x = bsgs(g1.local, positive, g1.order, prime_power);
        if (!x) throw Error("discrete logarithm failed");
        out[0] = minus ? 1 : 0;
        out[1] = *x;
        return true;
    }
};

std::shared_ptr<const CharacterGroup> CharacterGroup::build(const Factorization& f) {
    if (f.n == 0) throw DomainError("character group modulus must be positive");
    std::shared_ptr<CharacterGroup> group(new CharacterGroup());
    group->modulus_ = f.n;
    group->factorization_ = f;
    group->order_ = totient(f);

    auto lift = [&](u64 local, u64 prime_power) {
        std::vector<Congruence> parts;
        for (const auto& [p, e] : f.factors) {
            u64 pe = 1;
            for (unsigned i = 0; i < e; ++i) pe *= p;
            parts.push_back({pe == prime_power ? local : 1, pe});
        }
        return crt_combine(parts).residue;
    };

    for (const auto& [p, e] : f.factors) {
        Component c;
        c.prime = p;
        c.exponent = e;
        c.prime_power = 1;
        for (unsigned i = 0; i < e; ++i) c.prime_power *= p;
        c.first = group->generators_.size();
        const u64 pk = c.prime_power;
        const u64 phi_pk = pk / p * (p - 1);

        if (p != 2) {
            u64 g = primitive_root_mod_prime(p);
            if (e >= 2 && pow_mod(g, p - 1, p * p) == 1) g += p;
            group->generators_.push_back({p, e, pk, g, lift(g, pk), phi_pk});
            c.count = 1;
            if (pk <= kTableThreshold) {
                c.table.assign(pk, kNotUnit);
                u64 cur = 1;
                for (u64 i = 0; i < phi_pk; ++i) {
                    c.table[cur] = static_cast<std::uint32_t>(i);
                    cur = mul_mod(cur, g, pk);
                }
            }
        } else if (e == 2) {
            group->generators_.push_back({2, 2, 4, 3, lift(3, 4), 2});
            c.count = 1;
            c.table = {kNotUnit, 0, kNotUnit, 1};
        } else if (e >= 3) {
            group->generators_.push_back({2, e, pk, pk - 1, lift(pk - 1, pk), 2});
            group->generators_.push_back({2, e, pk, 5, lift(5, pk), pk / 4});
            c.count = 2;
            if (pk <= kTableThreshold) {
                c.table.assign(pk, kNotUnit);
                u64 cur = 1;
                for (u64 b = 0; b < pk / 4; ++b) {
                    c.table[cur] = static_cast<std::uint32_t>(2 * b);
                    c.table[pk - cur] = static_cast<std::uint32_t>(2 * b + 1);
                    cur = mul_mod(cur, 5, pk);
                }
            }
        }
        // modulus 2 has a trivial unit group: no generator.
        group->components_.push_back(std::move(c));
    }
    for (const auto& g : group->generators_) group->exponent_ = lcm(group->exponent_, g.order);
    return group;
}

bool CharacterGroup::discrete_log(i64 n, std::span<u64> out) const {
    if (out.size() != generators_.size()) throw DomainError("discrete_log output has the wrong size");
    const u64 r = reduce_mod(n, modulus_);
    if (std::gcd(r, modulus_) != 1) return false;
    for (const auto& c : components_)
        if (!c.logs(r, generators_, out.data() + c.first)) return false;
    return true;
}

std::optional<u64> CharacterGroup::angle(std::span<const u64> chi, i64 n) const {
    const u64 r = reduce_mod(n, modulus_);
    if (std::gcd(r, modulus_) != 1) return std::nullopt;
    u64 logs[64];
    u64 total = 0;
    for (const auto& c : components_) {
        if (!c.logs(r, generators_, logs + c.first)) return std::nullopt;
    }
    for (std::size_t i = 0; i < generators_.size(); ++i) {
        const u64 scale = exponent_ / generators_[i].order;
        const u128 term = u128{chi[i]} * logs[i] % generators_[i].order * scale;
        total = static_cast<u64>((u128{total} + term) % exponent_);
    }
    return total;
}

std::optional<u64> CharacterGroup::local_angle(const Component& c, std::span<const u64> chi, u64 residue) const {
    u64 logs[2];
    if (!c.logs(residue, generators_, logs)) return std::nullopt;
    u64 total = 0;
    for (std::size_t j = 0; j < c.count; ++j) {
        const auto& g = generators_[c.first + j];
        const u128 term = u128{chi[c.first + j]} * logs[j] % g.order * (exponent_ / g.order);
        total = static_cast<u64>((u128{total} + term) % exponent_);
    }
    return total;
}

u64 CharacterGroup::conductor(std::span<const u64> chi) const {
    u64 f = 1;
    for (const auto& c : components_) {
        bool trivial = true;
        for (std::size_t j = 0; j < c.count; ++j) trivial = trivial && chi[c.first + j] == 0;
        if (trivial) continue;  // induced from p^0
        // The whole unit group (level 0, and level 1 when p = 2) is already
        // excluded; from here U_m is cyclic, generated by 1 + p^m.
        unsigned m = c.prime == 2 ? 2 : 1;
        u64 pm = c.prime == 2 ? 4 : c.prime;
        for (; m < c.exponent; ++m, pm *= c.prime) {
            if (local_angle(c, chi, 1 + pm).value_or(1) == 0) break;
        }
        f *= pm;
    }
    return f;
}

u64 CharacterGroup::index_of(std::span<const u64> exponents) const {
    u64 index = 0;
    u64 radix = 1;
    for (std::size_t i = 0; i < generators_.size(); ++i) {
        index += (exponents[i] % generators_[i].order) * radix;
        radix *= generators_[i].order;
    }
    return index;
}

std::vector<u64> CharacterGroup::exponents_of(u64 index) const {
    std::vector<u64> out(generators_.size());
    for (std::size_t i = 0; i < generators_.size(); ++i) {
        out[i] = index % generators_[i].order;
        index /= generators_[i].order;
    }
    return out;
}

CharacterHandle CharacterGroup::character(std::span<const u64> exponents) const {
    if (exponents.size() != generators_.size()) throw DomainError("exponent vector has the wrong length");
    CharacterHandle h;
    h.group_ = shared_from_this();
    h.exponents_.resize(exponents.size());
    for (std::size_t i = 0; i < exponents.size(); ++i) h.exponents_[i] = exponents[i] % generators_[i].order;
    h.index_ = index_of(h.exponents_);
    h.conductor_ = conductor(h.exponents_);
    return h;
}

CharacterHandle CharacterGroup::character(u64 index) const {
    if (index >= order_) throw DomainError("character index out of range");
    return character(exponents_of(index));
}

std::vector<CharacterHandle> CharacterGroup::characters() const {
    std::vector<CharacterHandle> out;
    out.reserve(order_);
    for (u64 i = 0; i < order_; ++i) out.push_back(character(i));
    return out;
}

CharacterHandle CharacterGroup::product(const CharacterHandle& a, const CharacterHandle& b) const {
    std::vector<u64> e(generators_.size());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = (a.exponents_[i] + b.exponents_[i]) % generators_[i].order;
    return character(e);
}

CharacterHandle CharacterGroup::conjugate(const CharacterHandle& a) const {
    std::vector<u64> e(generators_.size());
    for (std::size_t i = 0; i < e.size(); ++i)
        e[i] = (generators_[i].order - a.exponents_[i]) % generators_[i].order;
    return character(e);
}

u64 CharacterHandle::modulus() const { return group_->modulus(); }

bool CharacterHandle::is_principal() const {
    for (u64 e : exponents_)
        if (e != 0) return false;
    return true;
}

std::optional<RootOfUnity> CharacterHandle::exact(i64 n) const {
    const auto a = group_->angle(exponents_, n);
    if (!a) return std::nullopt;
    return RootOfUnity::make(*a, group_->exponent());
}

std::complex<double> CharacterHandle::operator()(i64 n) const {
    const auto r = exact(n);
    return r ? r->to_complex() : std::complex<double>{0.0, 0.0};
}

std::vector<std::complex<double>> CharacterHandle::value_table() const {
    std::vector<std::complex<double>> out(modulus());
    for (u64 n = 0; n < out.size(); ++n) out[n] = (*this)(static_cast<i64>(n));
    return out;
}

u64 CharacterHandle::order() const {
    u64 o = 1;
    const auto gens = group_->generators();
    for (std::size_t i = 0; i < gens.size(); ++i) o = lcm(o, gens[i].order / std::gcd(exponents_[i], gens[i].order));
    return o;
}

u64 primitive_count(const Factorization& r) {
    u64 count = 1;
    for (const auto& [p, e] : r.factors) {
        // phi(p^e) - phi(p^(e-1))
        u64 pe1 = 1;
        for (unsigned i = 1; i < e; ++i) pe1 *= p;
        const u64 phi_e = pe1 * (p - 1);
        const u64 phi_e1 = e == 1 ? 1 : pe1 / p * (p - 1);
        count *= phi_e - phi_e1;
    }
    return count;
}

std::vector<CharacterHandle> primitive_characters(const CharacterGroup& group) {
    std::vector<CharacterHandle> out;
    for (auto& chi : group.characters())
        if (chi.is_primitive()) out.push_back(std::move(chi));
    return out;
}

std::vector<CharacterHandle> nonlifted_set(const CharacterGroup& group_s, u64 q) {
    if (radical(group_s.factorization()) != q)
        throw DomainError("q = " + std::to_string(q) + " is not the radical of " + std::to_string(group_s.modulus()));
    std::vector<CharacterHandle> out;
    for (auto& chi : group_s.characters())
        if (q % chi.conductor() != 0) out.push_back(std::move(chi));
    return out;
}

std::vector<CharacterHandle> nonlifted_set(const ModulusProfile& s) {
    return nonlifted_set(*CharacterGroup::build(s.factorization), s.radical);
}

std::vector<u64> nonlifted_conductors(const ModulusProfile& s) {
    std::vector<u64> out;
    for (u64 r : divisors(s.factorization))
        if (s.radical % r != 0 && primitive_count(factorize(r)) > 0) out.push_back(r);
    return out;
}

}  // namespace bvlab
