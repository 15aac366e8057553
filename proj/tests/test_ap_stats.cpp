#include "bvlab/ap_stats.hpp"
#include "bvlab/error.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

using namespace bvlab;

namespace {

const PrimeStore& store() {
    static const PrimeStore s = build_prime_store(1000000);
    return s;
}

// Max over coprime classes of |pi(y; s, a) - Li(y)/phi(s)| on the grid
// y = 2, 2.01, ..., x. Li is stepped with Simpson's rule on each grid cell,
// starting from the series value at 2.
double grid_sup(double x, u64 s) {
    const u64 phi = oracle::phi(s);
    std::vector<i64> counts(s, 0);
    std::vector<bool> unit(s);
    for (u64 a = 0; a < s; ++a) unit[a] = std::gcd(a, s) == 1;
    const auto f = [](double t) { return 1.0 / std::log(t); };
    double li = 0.0, best = 0.0;
    const i64 steps = static_cast<i64>(std::llround((x - 2.0) * 100.0));
    for (i64 k = 0; k <= steps; ++k) {
        const i64 hundredths = 200 + k;
        if (k > 0) {
            const double a = (hundredths - 1) / 100.0, b = hundredths / 100.0;
            li += (b - a) / 6.0 * (f(a) + 4.0 * f((a + b) / 2.0) + f(b));
        }
        if (hundredths % 100 == 0) {
            const u64 n = static_cast<u64>(hundredths / 100);
            if (oracle::is_prime(n)) ++counts[n % s];
        }
        for (u64 a = 0; a < s; ++a)
            if (unit[a]) best = std::max(best, std::abs(static_cast<double>(counts[a]) - li / static_cast<double>(phi)));
    }
    return best;
}

}  // namespace

TEST_CASE("logarithmic integral against the series oracle") {
    CHECK(logarithmic_integral(2.0) == 0.0);
    // Independent high-precision values.
    CHECK(logarithmic_integral(2.5) == doctest::Approx(0.62213088738883117).epsilon(1e-12));
    CHECK(logarithmic_integral(10) == doctest::Approx(5.1204357246698052).epsilon(1e-12));
    CHECK(logarithmic_integral(1e6) == doctest::Approx(78626.503995682064).epsilon(1e-12));
    CHECK(logarithmic_integral(1e8) == doctest::Approx(5762208.3302842514).epsilon(1e-12));
    for (double x : {3.0, 17.5, 100.0, 1000.0, 12345.0, 1e5, 3e7})
        CHECK(logarithmic_integral(x) == doctest::Approx(oracle::Li(x)).epsilon(1e-11));
    CHECK_THROWS_AS(logarithmic_integral(1.9), DomainError);
    CHECK_THROWS_AS(logarithmic_integral(10, 1e-3), DomainError);
    double last = 0.0;
    for (int x = 2; x <= 1000; ++x) {
        const double v = logarithmic_integral(x);
        REQUIRE(v >= last);
        last = v;
    }
}

TEST_CASE("LiTable agrees with direct evaluation") {
    const auto small = build_prime_store(100000);
    const LiTable table(small);
    REQUIRE(table.size() == small.size());
    for (std::size_t k = 0; k < small.size(); k += 997)
        REQUIRE(table.values()[k] == doctest::Approx(logarithmic_integral(small.primes()[k])).epsilon(1e-12));
}

TEST_CASE("primes in progressions") {
    CHECK(count_primes_in_ap(store(), 100, 4, 1) == 11);
    CHECK(count_primes_in_ap(store(), 100, 4, 3) == 13);
    CHECK(count_primes_in_ap(store(), 100, 1, 0) == 25);
    CHECK(count_primes_in_ap(store(), 100, 4, -1) == 13);
    CHECK_THROWS_AS(count_primes_in_ap(store(), 2e6, 4, 1), OutOfRangeError);
    for (u64 q : {3, 7, 10, 30})
        for (u64 a = 0; a < q; ++a) REQUIRE(count_primes_in_ap(store(), 3000, q, a) == oracle::pi_ap(3000, q, a));
}

TEST_CASE("partition identity for q <= 100") {
    for (double y : {2.0, 97.0, 1000.5, 100000.0}) {
        const u64 pi = store().count_primes(y);
        for (u64 q = 1; q <= 100; ++q) {
            u64 total = 0;
            for (u64 a = 0; a < q; ++a)
                if (std::gcd(a, q) == 1) total += count_primes_in_ap(store(), y, q, a);
            for (const auto& pe : factorize(q).factors)
                if (static_cast<double>(pe.p) <= y) ++total;
            REQUIRE(total == pi);
        }
    }
}

TEST_CASE("sup_error candidate scan against a dense grid") {
    std::mt19937_64 gen(17);
    for (int trial = 0; trial < 20; ++trial) {
        const u64 s = 1 + gen() % 200;
        const double x = 2.0 + static_cast<double>(gen() % 299800) / 100.0;
        const auto record = sup_error(store(), x, make_profile(s));
        const double grid = grid_sup(x, s);
        const double slack = 0.01 / std::log(2.0);
        CAPTURE(s);
        CAPTURE(x);
        REQUIRE(grid <= record.value + slack);
        REQUIRE(record.value <= grid + slack);
    }
    // The example from x = 10, s = 3.
    const auto r = sup_error(store(), 10, make_profile(3));
    CHECK(std::abs(r.value - grid_sup(10, 3)) <= 0.01 / std::log(2.0));
}

TEST_CASE("sup_error record is self-consistent") {
    std::mt19937_64 gen(23);
    for (int trial = 0; trial < 30; ++trial) {
        const u64 s = 1 + gen() % 500;
        const double x = 2.0 + static_cast<double>(gen() % 100000);
        const auto r = sup_error(store(), x, make_profile(s));
        REQUIRE(std::gcd(r.best_residue, s) == 1);
        REQUIRE(r.best_point >= 2.0);
        REQUIRE(r.best_point <= x);
        const double again = ap_error(store(), r.best_point, s, static_cast<i64>(r.best_residue), r.side);
        REQUIRE(again == doctest::Approx(r.error).epsilon(1e-9));
        REQUIRE(std::abs(r.error) == doctest::Approx(r.value).epsilon(1e-12));
    }
    const auto whole = sup_error(store(), 1000, make_profile(1));
    CHECK(whole.best_residue == 0);
    CHECK_THROWS_AS(sup_error(store(), 2e6, make_profile(7)), OutOfRangeError);
}

TEST_CASE("families") {
    auto bounds = default_bounds(1e6);
    bounds.prime_bound = 13;
    const auto fam = generate_family(1e6, 1e3, FamilyKind::prime_powers, bounds);
    std::vector<u64> members;
    for (const auto& m : fam.members) members.push_back(m.s);
    CHECK(members == std::vector<u64>{1024, 1331});

    // (Q, 2Q] always holds a prime, so an empty family needs a prime bound below 2.
    FamilyBounds tiny = bounds;
    tiny.prime_bound = 1.5;
    const auto empty = generate_family(1e6, 1e3, FamilyKind::prime_powers, tiny);
    CHECK(empty.members.empty());
    CHECK_FALSE(empty.warnings.empty());

    FamilyBounds wide = bounds;
    wide.radical_bound = 4000;
    const auto greedy = generate_family(1e6, 1e3, FamilyKind::coprime_radical_bounded, wide);
    REQUIRE(greedy.members.size() > 10);
    for (std::size_t i = 0; i < greedy.members.size(); ++i) {
        REQUIRE(greedy.members[i].s > 1000);
        REQUIRE(greedy.members[i].s <= 2000);
        for (std::size_t j = 0; j < i; ++j) REQUIRE(std::gcd(greedy.members[i].s, greedy.members[j].s) == 1);
    }
    CHECK(greedy.members.front().s == 1001);
}

TEST_CASE("census classification") {
    const auto fam = generate_family(1e6, 1e3, FamilyKind::prime_powers, default_bounds(1e6));
    REQUIRE(fam.members.size() == 140);

    const auto data = compute_census_data(store(), LiTable(store()), 1e6, fam, 2);
    std::size_t last = 0;
    for (double A : {0.0, 1.0, 2.0, 4.0, 8.0}) {
        const auto report = classify_census(store(), 1e6, fam, A, data);
        REQUIRE(report.exceptional_count >= last);
        last = report.exceptional_count;
        for (const auto& row : report.rows) {
            const double threshold = 78498.0 / (static_cast<double>(row.profile.totient) * std::pow(std::log(1e6), A));
            REQUIRE(row.threshold == doctest::Approx(threshold).epsilon(1e-12));
            REQUIRE(row.exceptional == (row.record.value > row.threshold));
        }
    }
    const auto extreme = classify_census(store(), 1e6, fam, 50.0, data);
    CHECK(extreme.exceptional_count == fam.members.size());

    // Re-evaluating F* member by member reproduces the classification.
    const auto report = classify_census(store(), 1e6, fam, 1.0, data);
    for (std::size_t i = 0; i < report.rows.size(); i += 7) {
        const auto fresh = sup_error(store(), 1e6, report.rows[i].profile);
        REQUIRE(fresh.value == report.rows[i].record.value);
        REQUIRE((fresh.value > report.rows[i].threshold) == report.rows[i].exceptional);
    }
}

TEST_CASE("census output does not depend on the thread count") {
    const auto fam = generate_family(1e6, 1e3, FamilyKind::prime_powers, default_bounds(1e6));
    std::string reference;
    for (unsigned threads : {1u, 2u, 4u}) {
        const auto report = exceptional_census(store(), 1e6, fam, 1.0, threads);
        std::ostringstream csv;
        write_census_csv(csv, report);
        const std::string text = csv.str() + census_to_json(report).dump();
        if (reference.empty()) reference = text;
        REQUIRE(text == reference);
    }
}

TEST_CASE("format_double round trips") {
    for (double v : {0.0, 1.0, 0.1, 1.0 / 3.0, 78626.503995682064, 1e-300, -2.5})
        CHECK(std::stod(format_double(v)) == v);
}
