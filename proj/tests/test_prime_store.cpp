#include "bvlab/error.hpp"
#include "bvlab/prime_store.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <algorithm>
#include <random>

using namespace bvlab;
using oracle::u64;

namespace {

std::vector<std::uint32_t> as_vector(std::span<const std::uint32_t> s) { return {s.begin(), s.end()}; }

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("bvlab_test_" + name);
}

}  // namespace

TEST_CASE("small limits") {
    CHECK(as_vector(build_prime_store(10).primes()) == std::vector<std::uint32_t>{2, 3, 5, 7});
    CHECK(as_vector(build_prime_store(2).primes()) == std::vector<std::uint32_t>{2});
    CHECK(as_vector(build_prime_store(3).primes()) == std::vector<std::uint32_t>{2, 3});
    CHECK_THROWS_AS(build_prime_store(1), DomainError);
    CHECK_THROWS_AS(build_prime_store(0), DomainError);
}

TEST_CASE("matches trial division for every limit up to 3000 and several segment sizes") {
    const auto reference = oracle::primes_upto(3000);
    for (std::size_t segment : {64u, 128u, 4096u}) {
        for (u64 limit = 2; limit <= 3000; ++limit) {
            const auto store = build_prime_store(limit, segment);
            const auto expected_end = std::upper_bound(reference.begin(), reference.end(), limit);
            REQUIRE(std::equal(store.primes().begin(), store.primes().end(), reference.begin(), expected_end));
            REQUIRE(store.size() == static_cast<std::size_t>(expected_end - reference.begin()));
        }
    }
}

TEST_CASE("pi(10^6) and segment-size invariance") {
    const auto a = build_prime_store(1000000, 64);
    const auto b = build_prime_store(1000000, 1 << 20);
    SieveOptions threaded;
    threaded.threads = 3;
    threaded.segment_size = 512;
    const auto c = build_prime_store(1000000, threaded);
    CHECK(a.size() == 78498);
    CHECK(a == b);
    CHECK(a == c);
}

TEST_CASE("segment size below 64 is rejected") {
    CHECK_THROWS_AS(build_prime_store(1000, 32), DomainError);
}

TEST_CASE("counting and ranges") {
    const auto store = build_prime_store(200000);
    CHECK(store.count_primes(1.5) == 0);
    CHECK(store.count_primes(0.0) == 0);
    CHECK(store.count_primes(10) == 4);
    CHECK(store.count_primes(10.99) == 4);
    CHECK(store.count_primes(11) == 5);
    CHECK(store.count_primes(100000) == 9592);
    CHECK_THROWS_AS(store.count_primes(200001), OutOfRangeError);

    CHECK(as_vector(store.primes_in_range(10, 20)) == std::vector<std::uint32_t>{11, 13, 17, 19});
    CHECK(store.primes_in_range(7, 7).empty());
    CHECK(as_vector(store.primes_in_range(7, 8)) == std::vector<std::uint32_t>{7});
    // Trial-division oracle: six primes in [10^5, 10^5 + 100), two in [10^5, 10^5 + 20).
    CHECK(as_vector(store.primes_in_range(100000, 100100)) ==
          std::vector<std::uint32_t>{100003, 100019, 100043, 100049, 100057, 100069});
    CHECK(as_vector(store.primes_in_range(100000, 100020)) == std::vector<std::uint32_t>{100003, 100019});
    CHECK_THROWS_AS(store.primes_in_range(10, 300000), OutOfRangeError);

    CHECK(store.is_prime(199999));
    CHECK_FALSE(store.is_prime(200000));
    CHECK_FALSE(store.is_prime(1));
}

TEST_CASE("count_primes agrees with trial division at random points") {
    const auto store = build_prime_store(50000);
    std::mt19937_64 gen(7);
    for (int i = 0; i < 200; ++i) {
        const u64 y = gen() % 50001;
        u64 expected = 0;
        for (u64 n = 2; n <= y; ++n) expected += oracle::is_prime(n) ? 1 : 0;
        REQUIRE(store.count_primes_upto(y) == expected);
    }
}

TEST_CASE("cache round trip") {
    const auto store = build_prime_store(10000);
    const auto path = temp_file("roundtrip.cache");
    save_cache(store, path);
    const auto loaded = load_cache(path);
    CHECK(loaded == store);
    CHECK(load_cache(path, 10000) == store);
    CHECK_THROWS_AS(load_cache(path, 20000), VersionError);
    std::filesystem::remove(path);

    // Gaps above 510 and the odd gap 2 -> 3 both take the escape path.
    const auto wide = build_prime_store(2000000);
    CHECK(decode_cache(encode_cache(wide)) == wide);
}

TEST_CASE("corrupt caches") {
    const auto bytes = encode_cache(build_prime_store(10000));

    auto truncated = bytes;
    truncated.resize(bytes.size() / 2);
    CHECK_THROWS_AS(decode_cache(truncated), FormatError);

    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    try {
        decode_cache(bad_magic);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(e.offset() == 0);
    }

    auto flipped = bytes;
    flipped[bytes.size() / 2] ^= 0x40;
    CHECK_THROWS_AS(decode_cache(flipped), FormatError);

    CHECK_THROWS_AS(load_cache(temp_file("does-not-exist.cache")), ResourceError);
}

TEST_CASE("memory budget names the failing segment") {
    SieveOptions options;
    options.memory_budget = 1024;
    options.segment_size = 4096;
    try {
        build_prime_store(10000000, options);
        FAIL("expected ResourceError");
    } catch (const ResourceError& e) {
        CHECK(std::string(e.what()).find("segment") != std::string::npos);
    }
}
