#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace bvlab {

/// Immutable table of every prime up to `limit`. Safe for concurrent reads.
///
/// Real-valued arguments follow step-function semantics: a query at y behaves
/// like a query at floor(y).
class PrimeStore {
public:
    PrimeStore() = default;

    std::uint64_t limit() const noexcept { return limit_; }
    std::size_t size() const noexcept { return primes_.size(); }
    std::span<const std::uint32_t> primes() const noexcept { return primes_; }

    /// pi(y) = #{p <= y}. Throws OutOfRangeError when y > limit.
    std::uint64_t count_primes(double y) const;
    std::uint64_t count_primes_upto(std::uint64_t n) const;

    /// Primes p with lo <= p < hi, as a view into the store.
    std::span<const std::uint32_t> primes_in_range(double lo, double hi) const;

    /// Primes p <= n, n <= limit.
    std::span<const std::uint32_t> primes_upto(std::uint64_t n) const;

    bool is_prime(std::uint64_t n) const;

    friend bool operator==(const PrimeStore&, const PrimeStore&) = default;

private:
    friend PrimeStore make_prime_store(std::uint64_t, std::vector<std::uint32_t>);

    std::uint64_t limit_ = 0;
    std::vector<std::uint32_t> primes_;
};

// Validates ordering and bounds; used by the sieve and the cache loader.
PrimeStore make_prime_store(std::uint64_t limit, std::vector<std::uint32_t> primes);

struct SieveOptions {
    // Bytes of odd-only bitmap per segment (each byte covers 16 integers).
    std::size_t segment_size = 1 << 16;
    unsigned threads = 1;
    // 0 disables the check.
    std::size_t memory_budget = 0;
};

inline constexpr std::uint64_t kMaxSieveLimit = 0xFFFFFFFFull;

/// Segmented odd-only sieve of Eratosthenes. The result does not depend on the
/// segment size or the thread count.
PrimeStore build_prime_store(std::uint64_t limit, const SieveOptions& options = {});

inline PrimeStore build_prime_store(std::uint64_t limit, std::size_t segment_size) {
    SieveOptions options;
    options.segment_size = segment_size;
    return build_prime_store(limit, options);
}

// Cache file layout (little-endian):
//   "BVPC" | u16 version | u64 limit | u64 count | delta stream | u32 crc32
// The delta stream holds one byte gap/2 per prime, starting from 0; a 0x00
// byte escapes to a u32 absolute gap (odd gaps and gaps above 510).
inline constexpr std::uint16_t kCacheVersion = 1;

void save_cache(const PrimeStore& store, const std::filesystem::path& path);

/// Throws FormatError (bad magic, truncation, checksum, inconsistent stream)
/// or VersionError (unknown version, limit differing from expected_limit).
PrimeStore load_cache(const std::filesystem::path& path,
                      std::optional<std::uint64_t> expected_limit = std::nullopt);

std::vector<std::uint8_t> encode_cache(const PrimeStore& store);
PrimeStore decode_cache(std::span<const std::uint8_t> bytes,
                        std::optional<std::uint64_t> expected_limit = std::nullopt);

}  // namespace bvlab
