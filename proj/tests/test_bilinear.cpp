#include "bvlab/bilinear.hpp"
#include "bvlab/characters.hpp"
#include "bvlab/error.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace bvlab;

namespace {

using cd = std::complex<double>;

i64 coprime_residue(std::mt19937_64& gen, u64 s) {
    i64 e = static_cast<i64>(gen() % s);
    while (std::gcd(static_cast<u64>(e), s) != 1) e = (e + 1) % static_cast<i64>(s);
    return e;
}

BilinearConfig random_config(std::mt19937_64& gen, u64 s, double x) {
    const auto profile = make_profile(s);
    const i64 e = coprime_residue(gen, s);
    const double y = std::floor(x / 2.0) + static_cast<double>(gen() % static_cast<u64>(x / 2.0));
    return make_bilinear_config(x, y, profile, e, e % static_cast<i64>(profile.radical));
}

// Sigma' for b supported on n0 alone, counted m by m.
double single_support_sigma(const BilinearConfig& cfg, double K, u64 n0, cd bz) {
    const u64 s = cfg.s(), q = cfg.q();
    double total = 0.0;
    for (u64 m = static_cast<u64>(std::floor(K)) + 1; static_cast<double>(m) <= 2.0 * K; ++m) {
        if (std::gcd(m, q) != 1) continue;
        const double first = (n0 * m) % s == reduce_mod(cfg.e, s) ? 1.0 : 0.0;
        const double second = (n0 * m) % q == reduce_mod(cfg.d, q) ? 1.0 : 0.0;
        const double lambda = static_cast<double>(q) / static_cast<double>(s);
        total += (first - lambda * second) * (first - lambda * second);
    }
    return total * std::norm(bz);
}

}  // namespace

TEST_CASE("exact rational powers") {
    CHECK(floor_rational_power(1000000, {1, 3}) == 100);
    CHECK(floor_rational_power(999999, {1, 3}) == 99);
    CHECK(floor_rational_power(1000000, {2, 3}) == 10000);
    CHECK(floor_rational_power(10000, {1, 2}) == 100);
    CHECK(floor_rational_power(0, {1, 3}) == 0);
    for (u64 n = 1; n < 20000; n += 7) {
        const u64 r = floor_rational_power(n, {1, 3});
        REQUIRE(r * r * r <= n);
        REQUIRE((r + 1) * (r + 1) * (r + 1) > n);
    }
}

TEST_CASE("coefficient generators") {
    const auto a = random_unit_coefficients(7, 1), a2 = random_unit_coefficients(7, 1), b = random_unit_coefficients(7, 2);
    CHECK(a(12345) == a2(12345));
    CHECK(a(12345) != b(12345));
    CHECK(std::abs(std::abs(a(99)) - 1.0) < 1e-15);
    const auto sign = random_sign_coefficients(3, 0);
    for (u64 n = 1; n < 100; ++n) CHECK(std::abs(sign(n).real()) == 1.0);
    CHECK(single_coefficient(5, 2.0)(5) == cd(2.0, 0.0));
    CHECK(single_coefficient(5, 2.0)(4) == cd(0.0, 0.0));

    const auto rough = rough_sieve_coefficients(1e4, 0.25);
    CHECK(rough(1) == cd(1.0, 0.0));
    CHECK(rough(7) == cd(0.0, 0.0));
    CHECK(rough(11) == cd(1.0, 0.0));
    CHECK(rough(121) == cd(0.0, 0.0));
    check_sieve_support(rough, 1e4, 0.25, 1000);
    CHECK_THROWS_AS(check_sieve_support(constant_coefficients(1.0), 1e4, 0.25, 100), DomainError);
}

TEST_CASE("configuration checks") {
    const auto p = make_profile(49);
    CHECK_THROWS_AS(make_bilinear_config(1e4, 1e4, p, 7, 0), DomainError);
    CHECK_THROWS_AS(make_bilinear_config(1e4, 1e4, p, 3, 4), DomainError);
    CHECK_THROWS_AS(make_bilinear_config(1e4, 2e4, p, 3, 3), DomainError);
    const auto cfg = make_bilinear_config(1e6, 1e6, p, 3, 3);
    CHECK(cfg.lambda == Rational{1, 7});
    CHECK(cfg.M == doctest::Approx(2001.0));
    CHECK(cfg.type_two_low() == 100);
    CHECK(cfg.type_two_high() == 10000);
}

TEST_CASE("type I against the double loop") {
    const auto cfg = make_bilinear_config(1e4, 1e4, make_profile(49), 3, 3);
    CHECK(type_one_difference(cfg, zero_coefficients()) == cd(0.0, 0.0));

    // a supported on m = 1: one inner difference, within [-2, 2].
    const auto one = type_one_difference(cfg, single_coefficient(1, 1.0));
    CHECK(std::abs(one.real()) <= 2.0);
    const auto exact = oracle::bilinear(0, 1, 10000, 49, 7, 3, 3, [](u64) { return cd(1.0); }, [](u64) { return cd(1.0); });
    CHECK(std::abs(one - exact) < 1e-12);

    std::mt19937_64 gen(61);
    for (int trial = 0; trial < 10; ++trial) {
        const auto a = random_unit_coefficients(gen(), 0);
        const auto limited = [&](u64 m) { return m <= 100 ? a(m) : cd(0.0); };
        const auto value = type_one_difference(cfg, limited);
        const auto brute = oracle::bilinear(0, static_cast<u64>(cfg.M), 10000, 49, 7, 3, 3, limited, [](u64) { return cd(1.0); });
        REQUIRE(std::abs(value - brute) < 1e-12);
        REQUIRE(std::abs(value) <= 2.0 * cfg.M);
    }
}

TEST_CASE("type II against the double loop") {
    std::mt19937_64 gen(67);
    for (u64 s : {27, 49, 72, 200, 12}) {
        const auto cfg = random_config(gen, s, 1e4);
        const auto a = random_unit_coefficients(gen(), 0), b = random_sign_coefficients(gen(), 1);
        const auto value = type_two_difference(cfg, a, b);
        const auto brute = oracle::bilinear(cfg.type_two_low(), cfg.type_two_high(), static_cast<u64>(cfg.y), s, cfg.q(),
                                            cfg.e, cfg.d, a, b);
        CAPTURE(s);
        REQUIRE(std::abs(value - brute) <= 1e-10 * (1.0 + std::abs(brute)));

        cd blocks = 0.0;
        for (const auto& blk : dyadic_blocks(cfg)) blocks += block_difference(cfg, a, b, blk.K, blk.K_end);
        REQUIRE(std::abs(blocks - value) <= 1e-10 * (1.0 + std::abs(value)));
    }
    const auto cfg = random_config(gen, 27, 1e4);
    CHECK(type_two_difference(cfg, random_unit_coefficients(1, 1), zero_coefficients()) == cd(0.0, 0.0));
}

TEST_CASE("type II vanishes for squarefree moduli") {
    std::mt19937_64 gen(71);
    for (u64 s : {1, 2, 6, 30, 101, 210}) {
        const auto cfg = random_config(gen, s, 1e4);
        REQUIRE(type_two_difference(cfg, random_unit_coefficients(gen(), 0), random_unit_coefficients(gen(), 1)) ==
                cd(0.0, 0.0));
    }
}

TEST_CASE("dispersion identity") {
    const auto cfg = make_bilinear_config(1e4, 1e4, make_profile(25), 2, 2);
    const double L = 1e4 / 100.0;
    const cd z(1.0 / std::log(L), 0.0);
    const auto b = random_unit_coefficients(5, 1);
    const auto d = dispersion_decompose(cfg, 100, z, b);
    CHECK(d.identity_holds());
    CHECK(d.residual <= 1e-9 * (1.0 + d.sigma_prime));

    // Character form equals the smoothed main terms.
    double smoothed = 0.0;
    {
        const u64 s = 25, q = 5;
        const double K = 100.0;
        std::vector<cd> by_s(s, 0.0), by_q(q, 0.0);
        for (u64 n = 1; static_cast<double>(n) <= L; ++n) {
            const cd bn = b(n) * std::exp(-z * std::log(static_cast<double>(n)));
            if (std::gcd(n, s) != 1) continue;
            by_s[n % s] += bn;
            by_q[n % q] += bn;
        }
        for (const auto& v : by_s) smoothed += K / s * std::norm(v);
        for (const auto& v : by_q) smoothed -= K * q / (double(s) * s) * std::norm(v);
    }
    CHECK(d.character_form == doctest::Approx(smoothed).epsilon(1e-10));

    const auto empty = dispersion_decompose(cfg, 2e4, z, b);  // x / K < 1
    CHECK(empty.sigma_prime == 0.0);
    CHECK(empty.residual == 0.0);

    const u64 n0 = 7;
    const auto single = dispersion_decompose(cfg, 100, z, single_coefficient(n0, 1.0));
    const cd bz = std::exp(-z * std::log(static_cast<double>(n0)));
    CHECK(single.sigma_prime == doctest::Approx(single_support_sigma(cfg, 100, n0, bz)).epsilon(1e-12));

    std::mt19937_64 gen(73);
    for (int trial = 0; trial < 30; ++trial) {
        const u64 s = 2 + gen() % 199;
        const auto c = random_config(gen, s, 100.0 + static_cast<double>(gen() % 9901));
        const double K = 1.0 + static_cast<double>(gen() % static_cast<u64>(std::sqrt(c.x)));
        const cd zz(0.1 + static_cast<double>(gen() % 100) / 100.0, static_cast<double>(gen() % 200) / 10.0 - 10.0);
        const auto r = dispersion_decompose(c, K, zz, random_unit_coefficients(gen(), 3));
        REQUIRE(r.identity_holds());
    }
}

TEST_CASE("congruence indicator through characters") {
    for (u64 s = 2; s <= 60; s += 3) {
        const auto g = build_character_group(s);
        std::vector<std::vector<cd>> tables;
        for (const auto& chi : g->characters()) tables.push_back(chi.value_table());
        for (u64 n1 = 0; n1 < s; ++n1)
            for (u64 n2 = 0; n2 < s; ++n2) {
                cd sum = 0.0;
                for (const auto& t : tables) sum += t[n1] * std::conj(t[n2]);
                sum /= static_cast<double>(tables.size());
                const bool match = n1 == n2 && std::gcd(n1, s) == 1;
                REQUIRE(std::abs(sum - (match ? 1.0 : 0.0)) < 1e-12);
            }
    }
}

TEST_CASE("Perron blocks") {
    const auto cfg = make_bilinear_config(1e4, 1e4, make_profile(27), 2, 2);
    const double K = std::cbrt(1e4);
    const auto zero = perron_block(cfg, K, 2 * K, zero_coefficients(), random_sign_coefficients(1, 1));
    CHECK(zero.direct == cd(0.0, 0.0));
    CHECK(zero.majorant == 0.0);
    const auto empty = perron_block(cfg, K, K, random_sign_coefficients(1, 0), random_sign_coefficients(1, 1));
    CHECK(empty.direct == cd(0.0, 0.0));

    const auto r = perron_block(cfg, K, 2 * K, random_sign_coefficients(1, 0), random_sign_coefficients(1, 1));
    CHECK(std::norm(r.direct) <= r.majorant);
    CHECK(r.ratio < 1.0);
    CHECK(std::abs(r.direct - block_difference(cfg, random_sign_coefficients(1, 0), random_sign_coefficients(1, 1), K, 2 * K)) <
          1e-12);
}

TEST_CASE("budget expressions") {
    const double x = 1e6, L = std::log(x);
    CHECK(y_budget(x, 100, 0) == doctest::Approx((x * x / 1e4 + std::pow(x, 1.5)) * std::pow(L, 4)));
    CHECK(y_budget(x, 100, 10) ==
          doctest::Approx((x * x / 1e4 + std::pow(x, 1.5) + std::pow(x, 5.0 / 3.0) * 10 / 100 + x * 10) * std::pow(L, 4)));
    CHECK(y_budget(x, 100, 20) < 2.0 * y_budget(x, 100, 10));
    CHECK(y_budget(x, 100, 20) >= y_budget(x, 100, 10));

    // Type-I budget M^2 #Q <= Y over a grid with #Q <= Q <= x^(1/3).
    for (double lx = std::log(3.0); lx <= std::log(1e12); lx += 0.5) {
        const double xx = std::exp(lx), M = 2.0 * std::sqrt(xx) + 1.0;
        for (double Q = std::pow(xx, 0.01); Q <= std::cbrt(xx); Q *= 1.7) {
            const u64 card = static_cast<u64>(Q);
            REQUIRE(M * M * static_cast<double>(card) <= y_budget(xx, Q, card));
        }
    }
}

TEST_CASE("averaged square sums add up") {
    const auto a = random_unit_coefficients(9, 0), b = random_unit_coefficients(9, 1);
    std::vector<BilinearConfig> configs;
    for (u64 s : {8, 27, 25}) configs.push_back(make_bilinear_config(1e4, 1e4, make_profile(s), 1, 1));
    const double K = 30;
    double sum = 0.0;
    for (const auto& c : configs) sum += std::norm(block_difference(c, a, b, K, 2 * K));
    const auto report = averaged_square_sum(configs, K, 20, a, b, 2);
    CHECK(report.lhs == doctest::Approx(sum).epsilon(1e-9));
    CHECK(report.uses_bound1);

    CHECK(averaged_square_sum({}, K, 20, a, b).lhs == 0.0);
    const auto single = averaged_square_sum({configs[0]}, K, 20, a, b);
    CHECK(single.lhs == doctest::Approx(std::norm(block_difference(configs[0], a, b, K, 2 * K))).epsilon(1e-12));

    configs.push_back(make_bilinear_config(2e4, 2e4, make_profile(9), 1, 1));
    CHECK_THROWS_AS(averaged_square_sum(configs, K, 20, a, b), DomainError);
}
