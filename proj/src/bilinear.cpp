#include "bvlab/bilinear.hpp"

#include "bvlab/characters.hpp"
#include "bvlab/error.hpp"
#include "bvlab/parallel.hpp"
#include "bvlab/summation.hpp"

#include <cmath>
#include <map>
#include <numbers>

namespace bvlab {

namespace {

using cplx = std::complex<double>;

u64 splitmix(u64 z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// #{1 <= n <= top : n = r (mod m)} for r in [0, m).
u64 count_in_class(u64 top, u64 r, u64 m) {
    const u64 first = r == 0 ? m : r;
    return first > top ? 0 : (top - first) / m + 1;
}

u64 inverse_or_zero(u64 a, u64 m) { return m == 1 ? 0 : mod_inverse(static_cast<i64>(a), m); }

u64 floor_u64(double v) { return v < 1.0 ? 0 : static_cast<u64>(std::floor(v)); }

// Saturating a^k in 128 bits; returns false on overflow.
bool checked_pow(u64 a, u64 k, u128& out) {
    u128 r = 1;
    for (u64 i = 0; i < k; ++i) {
        if (a != 0 && r > (~u128{0}) / a) return false;
        r *= a;
    }
    out = r;
    return true;
}

struct Residues {
    u64 mod_s;  // e / m (mod s)
    u64 mod_q;  // d / m (mod q)
};

Residues residues_for(const BilinearConfig& cfg, u64 m) {
    const u64 inv = inverse_or_zero(m % cfg.s(), cfg.s());
    const u64 rs = cfg.s() == 1 ? 0 : mul_mod(reduce_mod(cfg.e, cfg.s()), inv, cfg.s());
    const u64 rq = cfg.q() == 1 ? 0 : mul_mod(reduce_mod(cfg.d, cfg.q()), inv % cfg.q(), cfg.q());
    return {rs, rq};
}

double lambda_of(const BilinearConfig& cfg) { return cfg.lambda.to_double(); }

// Sum of b_n over n <= top in the class r mod m.
cplx class_sum(const Coefficients& b, u64 top, u64 r, u64 m) {
    ComplexSum s;
    for (u64 n = r == 0 ? m : r; n <= top; n += m) s += b(n);
    return s.value();
}

cplx range_difference(const BilinearConfig& cfg, const Coefficients& a, const Coefficients& b, u64 lo, u64 hi) {
    const double lambda = lambda_of(cfg);
    const u64 ytop = floor_u64(cfg.y);
    ComplexSum total;
    for (u64 m = lo + 1; m <= hi; ++m) {
        if (std::gcd(m, cfg.s()) != 1) continue;
        const cplx am = a(m);
        if (am == cplx{}) continue;
        const u64 top = ytop / m;
        const Residues r = residues_for(cfg, m);
        const cplx first = class_sum(b, top, r.mod_s, cfg.s());
        const cplx second = class_sum(b, top, r.mod_q, cfg.q());
        total += am * (first - lambda * second);
    }
    return total.value();
}

}  // namespace

u64 coefficient_hash(u64 seed, u64 stream, u64 n) {
    return splitmix(splitmix(splitmix(seed) ^ stream) ^ n);
}

Coefficients zero_coefficients() {
    return [](u64) { return cplx{}; };
}

Coefficients constant_coefficients(cplx value) {
    return [value](u64) { return value; };
}

Coefficients random_unit_coefficients(u64 seed, u64 stream) {
    return [seed, stream](u64 n) {
        const double u = static_cast<double>(coefficient_hash(seed, stream, n) >> 11) * 0x1.0p-53;
        return std::polar(1.0, 2.0 * std::numbers::pi * u);
    };
}

Coefficients random_sign_coefficients(u64 seed, u64 stream) {
    return [seed, stream](u64 n) { return cplx{(coefficient_hash(seed, stream, n) >> 63) ? -1.0 : 1.0, 0.0}; };
}

Coefficients single_coefficient(u64 n0, cplx value) {
    return [n0, value](u64 n) { return n == n0 ? value : cplx{}; };
}

Coefficients rough_sieve_coefficients(double x, double epsilon) {
    const double bound = std::pow(x, epsilon);
    return [bound](u64 r) {
        if (r == 1) return cplx{1.0, 0.0};
        return is_prime_u64(r) && static_cast<double>(r) > bound ? cplx{1.0, 0.0} : cplx{};
    };
}

void check_sieve_support(const Coefficients& c, double x, double epsilon, u64 r_max) {
    const double bound = std::pow(x, epsilon);
    for (u64 r = 2; r <= r_max; ++r) {
        if (c(r) == cplx{}) continue;
        const u64 p = factorize(r).factors.front().p;
        if (static_cast<double>(p) <= bound)
            throw DomainError("c_" + std::to_string(r) + " is nonzero but " + std::to_string(p) +
                              " <= x^epsilon divides it");
    }
}

u64 floor_rational_power(u64 n, Rational e) {
    if (e.den == 0) throw DomainError("exponent with zero denominator");
    u128 target = 0;
    if (!checked_pow(n, e.num, target)) throw DomainError("floor_rational_power: n^num exceeds 128 bits");
    auto fits = [&](u64 m) {
        u128 v = 0;
        return checked_pow(m, e.den, v) && v <= target;
    };
    u64 m = static_cast<u64>(std::floor(std::pow(static_cast<double>(n), e.to_double())));
    while (m > 0 && !fits(m)) --m;
    while (fits(m + 1)) ++m;
    return m;
}

namespace {

u64 integral_power_floor(double x, Rational e) {
    if (x == std::floor(x) && x < 0x1.0p63) return floor_rational_power(static_cast<u64>(x), e);
    return floor_u64(std::pow(x, e.to_double()));
}

}  // namespace

u64 BilinearConfig::type_two_low() const { return integral_power_floor(x, alpha); }

u64 BilinearConfig::type_two_high() const {
    const Rational sum = Rational::make(alpha.num * beta.den + beta.num * alpha.den, alpha.den * beta.den);
    return integral_power_floor(x, sum);
}

BilinearConfig make_bilinear_config(double x, double y, const ModulusProfile& profile, i64 e, i64 d) {
    if (!(x >= 3.0)) throw DomainError("bilinear config needs x >= 3");
    if (!(y >= 1.0) || y > x) throw DomainError("bilinear config needs 1 <= y <= x");
    if (std::gcd(reduce_mod(e, profile.s), profile.s) != 1) throw DomainError("e must be coprime to s");
    if (reduce_mod(e, profile.radical) != reduce_mod(d, profile.radical))
        throw DomainError("e and d must agree modulo q");
    BilinearConfig cfg;
    cfg.x = x;
    cfg.y = y;
    cfg.profile = profile;
    cfg.e = e;
    cfg.d = d;
    cfg.lambda = Rational::make(profile.radical, profile.s);
    cfg.M = 2.0 * std::sqrt(x) + 1.0;
    return cfg;
}

std::complex<double> type_one_difference(const BilinearConfig& cfg, const Coefficients& a) {
    const u64 s = cfg.s();
    const u64 q = cfg.q();
    const u64 ytop = floor_u64(cfg.y);
    const u64 mtop = floor_u64(cfg.M);
    ComplexSum total;
    for (u64 m = 1; m <= mtop; ++m) {
        if (std::gcd(m, s) != 1) continue;
        const cplx am = a(m);
        if (am == cplx{}) continue;
        const u64 top = ytop / m;
        const Residues r = residues_for(cfg, m);
        const auto c1 = static_cast<i64>(count_in_class(top, r.mod_s, s));
        const auto c2 = static_cast<i64>(count_in_class(top, r.mod_q, q));
        // c1 - (q/s) c2 = (s c1 - q c2) / s, with the numerator exact.
        const double diff = static_cast<double>(static_cast<i64>(s) * c1 - static_cast<i64>(q) * c2) /
                            static_cast<double>(s);
        total += am * diff;
    }
    return total.value();
}

std::complex<double> block_difference(const BilinearConfig& cfg, const Coefficients& a, const Coefficients& b,
                                      double K, double K_end) {
    const u64 lo = floor_u64(K);
    const u64 hi = floor_u64(K_end);
    if (hi <= lo) return {};
    return range_difference(cfg, a, b, lo, hi);
}

std::complex<double> type_two_difference(const BilinearConfig& cfg, const Coefficients& a, const Coefficients& b) {
    const u64 lo = cfg.type_two_low();
    const u64 hi = cfg.type_two_high();
    if (hi <= lo) return {};
    return range_difference(cfg, a, b, lo, hi);
}

std::vector<DyadicBlock> dyadic_blocks(const BilinearConfig& cfg) {
    std::vector<DyadicBlock> out;
    const u64 hi = cfg.type_two_high();
    for (u64 k = cfg.type_two_low(); k < hi;) {
        const u64 end = std::min(hi, std::max<u64>(2 * k, k + 1));
        out.push_back({static_cast<double>(k), static_cast<double>(end)});
        k = end;
    }
    return out;
}

DispersionBreakdown dispersion_decompose(const BilinearConfig& cfg, double K, cplx z, const Coefficients& b) {
    if (!(K >= 1.0)) throw DomainError("dispersion needs K >= 1");
    DispersionBreakdown out;
    out.K = K;
    out.z = z;
    out.inner_length = cfg.x / K;
    const u64 s = cfg.s();
    const u64 q = cfg.q();
    out.gap_scale = out.inner_length * out.inner_length / static_cast<double>(s);

    const u64 ntop = floor_u64(out.inner_length);
    const u64 mlo = floor_u64(K);
    const u64 mhi = floor_u64(2.0 * K);
    if (ntop == 0 || mhi <= mlo) return out;

    const double lambda = lambda_of(cfg);
    std::vector<cplx> bz(ntop + 1);
    for (u64 n = 1; n <= ntop; ++n) bz[n] = b(n) * std::exp(-z * std::log(static_cast<double>(n)));

    // Direct: the modulus square for every m, inner sums walked term by term.
    CompensatedSum direct;
    for (u64 m = mlo + 1; m <= mhi; ++m) {
        if (std::gcd(m, s) != 1) continue;
        const Residues r = residues_for(cfg, m);
        ComplexSum first, second;
        for (u64 n = r.mod_s == 0 ? s : r.mod_s; n <= ntop; n += s) first += bz[n];
        for (u64 n = r.mod_q == 0 ? q : r.mod_q; n <= ntop; n += q) second += bz[n];
        direct += std::norm(first.value() - lambda * second.value());
    }
    out.sigma_prime = direct.value();

    // Expanded: pairs (n1, n2) grouped by residue class, times exact counts of m.
    std::vector<ComplexSum> by_s(s), by_q(q);
    for (u64 n = 1; n <= ntop; ++n) {
        by_s[n % s] += bz[n];
        by_q[n % q] += bz[n];
    }
    auto m_count = [&](u64 r, u64 mod) { return count_in_class(mhi, r, mod) - count_in_class(mlo, r, mod); };

    ComplexSum s1, s2, s3, s4;
    const u64 es = reduce_mod(cfg.e, s);
    for (u64 c = 0; c < s; ++c) {
        if (std::gcd(c, s) != 1) continue;
        const u64 target = s == 1 ? 0 : mul_mod(es, inverse_or_zero(c, s), s);
        const auto count = static_cast<double>(m_count(target, s));
        if (count == 0.0) continue;
        const cplx vs = by_s[c].value();
        const cplx vq = by_q[c % q].value();
        s1 += std::norm(vs) * count;
        s2 += vs * std::conj(vq) * count;
        s3 += vq * std::conj(vs) * count;
    }
    const u64 dq = reduce_mod(cfg.d, q);
    for (u64 c = 0; c < q; ++c) {
        if (std::gcd(c, q) != 1) continue;
        const u64 target = q == 1 ? 0 : mul_mod(dq, inverse_or_zero(c, q), q);
        s4 += std::norm(by_q[c].value()) * static_cast<double>(m_count(target, q));
    }
    out.sigma1 = s1.value();
    out.sigma2 = lambda * s2.value();
    out.sigma3 = lambda * s3.value();
    out.sigma4 = lambda * lambda * s4.value();
    out.residual = std::abs(out.sigma_prime - (out.sigma1 - out.sigma2 - out.sigma3 + out.sigma4));

    // Character route over the characters mod s not induced from q.
    const auto group = build_character_group(cfg.profile.factorization);
    CompensatedSum chars;
    for (const auto& chi : nonlifted_set(*group, q)) {
        const auto table = chi.value_table();
        ComplexSum t;
        for (u64 c = 0; c < s; ++c)
            if (table[c] != cplx{}) t += table[c] * by_s[c].value();
        chars += std::norm(t.value());
    }
    const double phi_s2 = static_cast<double>(s) * static_cast<double>(cfg.profile.totient);
    out.character_form = K / phi_s2 * chars.value();
    out.character_gap = out.sigma_prime - out.character_form;
    return out;
}

PerronBlockReport perron_block(const BilinearConfig& cfg, double K, double K_end, const Coefficients& a,
                               const Coefficients& b, const QuadratureOptions& options, double calibration) {
    if (!(K >= 1.0)) throw DomainError("perron_block needs K >= 1");
    const double L = cfg.x / K;
    if (!(L > std::numbers::e)) throw DomainError("perron_block needs x / K > e");

    PerronBlockReport out;
    out.K = K;
    out.K_end = K_end;
    out.c = 1.0 / std::log(L);
    out.T = L * std::log(L);
    out.calibration = calibration;
    out.weight = contour_weight(out.c, out.T);

    const u64 lo = floor_u64(K);
    const u64 hi = floor_u64(K_end);
    if (hi <= lo) return out;

    out.direct = block_difference(cfg, a, b, K, K_end);

    // Sum(K, z) = sum over products k = m n of coef_k (y / k)^z. Terms with
    // the same product share a frequency and are merged.
    const u64 s = cfg.s();
    const u64 q = cfg.q();
    const double lambda = lambda_of(cfg);
    const u64 ntop = floor_u64(L);
    std::map<u64, ComplexSum> merged;
    for (u64 m = lo + 1; m <= hi; ++m) {
        if (std::gcd(m, s) != 1) continue;
        const cplx am = a(m);
        if (am == cplx{}) continue;
        const Residues r = residues_for(cfg, m);
        // The class mod s sits inside the class mod q, so walking the latter covers both.
        for (u64 n = r.mod_q == 0 ? q : r.mod_q; n <= ntop; n += q) {
            const cplx bn = b(n);
            if (bn == cplx{}) continue;
            const double weight = (n % s == r.mod_s ? 1.0 : 0.0) - lambda;
            if (weight != 0.0) merged[m * n] += am * bn * weight;
        }
    }
    ExponentialSum d;
    for (const auto& [k, coef] : merged) {
        const cplx v = coef.value();
        if (v == cplx{}) continue;
        const double u = std::log(cfg.y / static_cast<double>(k));
        d.add(u, v * std::exp(out.c * u));
    }
    if (d.empty() && out.direct == cplx{}) return out;

    const ContourResult r = contour_integral(d, out.c, out.T, options);
    out.contour = r.integral;
    out.nodes = r.nodes;
    out.weighted_square = r.weighted_square;
    out.error = std::abs(out.direct - out.contour);
    const double two_pi = 2.0 * std::numbers::pi;
    out.majorant = out.weight * out.weighted_square / (two_pi * two_pi) + K * K;
    out.reference_budget = std::log(cfg.x) * out.weighted_square + K * K;
    out.ratio = std::norm(out.direct) / (calibration * out.majorant);
    return out;
}

double y_budget(double x, double Q, u64 cardQ) {
    if (!(x >= 3.0) || !(Q >= 1.0)) throw DomainError("y_budget needs x >= 3 and Q >= 1");
    const double card = static_cast<double>(cardQ);
    const double log_x = std::log(x);
    const double log4 = log_x * log_x * log_x * log_x;
    return (x * x / (Q * Q) + std::pow(x, 1.5) + std::pow(x, 5.0 / 3.0) * card / Q + x * card) * log4;
}

AveragedSquareReport averaged_square_sum(const std::vector<BilinearConfig>& configs, double K, double Q,
                                         const Coefficients& a, const Coefficients& b, unsigned threads) {
    AveragedSquareReport out;
    out.K = K;
    out.Q = Q;
    out.family_size = configs.size();
    if (configs.empty()) return out;
    const double x = configs.front().x;
    for (const auto& c : configs)
        if (c.x != x) throw DomainError("averaged_square_sum needs a common x");

    std::vector<double> squares(configs.size());
    parallel_for(configs.size(), threads,
                 [&](std::size_t i) { squares[i] = std::norm(block_difference(configs[i], a, b, K, 2.0 * K)); });
    CompensatedSum lhs;
    for (double v : squares) lhs += v;
    out.lhs = lhs.value();

    const double card = static_cast<double>(configs.size());
    const double log2 = std::log(x) * std::log(x);
    out.bound1 = (x * x / (Q * Q) + K * x + x * x * card / (Q * K) + K * K * card) * log2;
    out.bound2 = (x * x / (Q * Q) + x * x / K + K * x * card / Q + x * x * card / (K * K)) * log2;
    out.uses_bound1 = K <= std::sqrt(x);
    out.ratio1 = out.lhs / out.bound1;
    out.ratio2 = out.lhs / out.bound2;
    out.ratio_selected = out.uses_bound1 ? out.ratio1 : out.ratio2;
    return out;
}

nlohmann::json dispersion_to_json(const BilinearConfig& cfg, double Q, const DispersionBreakdown& d) {
    auto c = [](cplx v) { return nlohmann::json::array({v.real(), v.imag()}); };
    return {{"x", cfg.x},
            {"Q", Q},
            {"s", cfg.s()},
            {"q", cfg.q()},
            {"K", d.K},
            {"z", c(d.z)},
            {"inner_length", d.inner_length},
            {"sigma_prime", d.sigma_prime},
            {"sigma1", c(d.sigma1)},
            {"sigma2", c(d.sigma2)},
            {"sigma3", c(d.sigma3)},
            {"sigma4", c(d.sigma4)},
            {"residual", d.residual},
            {"character_form", d.character_form},
            {"character_gap", d.character_gap},
            {"bounds", {{"gap_scale", d.gap_scale}, {"cauchy_schwarz", d.K * d.sigma_prime}}},
            {"ratios",
             {{"residual_relative", d.residual / (1.0 + d.sigma_prime)},
              {"gap_over_scale", d.gap_scale > 0.0 ? d.character_gap / d.gap_scale : 0.0}}}};
}

}  // namespace bvlab
