#include "bvlab/prime_store.hpp"

#include "bvlab/error.hpp"
#include "bvlab/parallel.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <new>
#include <string>

namespace bvlab {

namespace {

std::uint64_t isqrt(std::uint64_t n) {
    auto r = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(n)));
    while (r * r > n) --r;
    while ((r + 1) * (r + 1) <= n) ++r;
    return r;
}

std::uint64_t floor_nonnegative(double y, const char* what) {
    if (!(y >= 0.0)) throw DomainError(std::string(what) + " must be a non-negative real");
    return static_cast<std::uint64_t>(std::floor(y));
}

// Plain sieve for the base primes up to sqrt(limit).
std::vector<std::uint32_t> small_primes(std::uint64_t bound) {
    std::vector<bool> composite(bound + 1, false);
    std::vector<std::uint32_t> out;
    for (std::uint64_t n = 2; n <= bound; ++n) {
        if (composite[n]) continue;
        out.push_back(static_cast<std::uint32_t>(n));
        for (std::uint64_t m = n * n; m <= bound; m += n) composite[m] = true;
    }
    return out;
}

struct SegmentPlan {
    std::uint64_t limit;
    std::uint64_t odd_count;      // numbers 1, 3, 5, ... <= limit
    std::uint64_t bits_per_segment;
    std::uint64_t segments;
};

class MemoryMeter {
public:
    explicit MemoryMeter(std::size_t budget) : budget_(budget) {}

    void charge(std::size_t bytes, std::uint64_t segment, std::uint64_t lo, std::uint64_t hi) {
        std::size_t now = used_.fetch_add(bytes) + bytes;
        if (budget_ != 0 && now > budget_) {
            throw ResourceError("memory budget of " + std::to_string(budget_) +
                                " bytes exceeded while sieving segment " + std::to_string(segment) +
                                " [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        }
    }

private:
    std::size_t budget_;
    std::atomic<std::size_t> used_{0};
};

// Sieves segments [first, last) and appends the odd primes found, in order.
void sieve_segments(const SegmentPlan& plan, std::span<const std::uint32_t> base,
                    std::uint64_t first, std::uint64_t last, MemoryMeter& meter,
                    std::vector<std::uint32_t>& out) {
    // Small limits need less than one full segment.
    const std::uint64_t words = std::min(plan.bits_per_segment, (plan.odd_count + 63) / 64 * 64) / 64;
    std::vector<std::uint64_t> bitmap;
    try {
        bitmap.resize(words);
    } catch (const std::bad_alloc&) {
        throw ResourceError("allocation failed for segment " + std::to_string(first));
    }

    for (std::uint64_t seg = first; seg < last; ++seg) {
        const std::uint64_t b0 = seg * plan.bits_per_segment;
        const std::uint64_t b1 = std::min(b0 + plan.bits_per_segment, plan.odd_count);
        const std::uint64_t lo = 2 * b0 + 1;
        const std::uint64_t hi = 2 * (b1 - 1) + 1;

        std::fill(bitmap.begin(), bitmap.begin() + static_cast<std::ptrdiff_t>((b1 - b0 + 63) / 64), 0);
        for (std::uint32_t p32 : base) {
            const std::uint64_t p = p32;
            if (p == 2) continue;
            if (p * p > hi) break;
            std::uint64_t start = std::max(p * p, (lo + p - 1) / p * p);
            if (start % 2 == 0) start += p;
            for (std::uint64_t i = (start - 1) / 2 - b0; i < b1 - b0; i += p)
                bitmap[i >> 6] |= std::uint64_t{1} << (i & 63);
        }

        const std::size_t before = out.size();
        try {
            for (std::uint64_t w = 0; w * 64 < b1 - b0; ++w) {
                std::uint64_t free_bits = ~bitmap[w];
                const std::uint64_t remaining = b1 - b0 - w * 64;
                if (remaining < 64) free_bits &= (std::uint64_t{1} << remaining) - 1;
                while (free_bits != 0) {
                    const std::uint64_t bit = w * 64 + std::countr_zero(free_bits);
                    free_bits &= free_bits - 1;
                    const std::uint64_t n = 2 * (b0 + bit) + 1;
                    if (n != 1) out.push_back(static_cast<std::uint32_t>(n));
                }
            }
        } catch (const std::bad_alloc&) {
            throw ResourceError("allocation failed while collecting primes of segment " +
                                std::to_string(seg) + " [" + std::to_string(lo) + ", " +
                                std::to_string(hi) + "]");
        }
        meter.charge((out.size() - before) * sizeof(std::uint32_t), seg, lo, hi);
    }
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_le(std::span<const std::uint8_t> bytes, std::size_t offset, int width) {
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= std::uint64_t{bytes[offset + i]} << (8 * i);
    return v;
}

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    std::size_t done = 0;
    while (done < bytes.size()) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - done, 1u << 30));
        crc = crc32(crc, bytes.data() + done, chunk);
        done += chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

constexpr std::array<std::uint8_t, 4> kMagic = {'B', 'V', 'P', 'C'};
constexpr std::size_t kHeaderSize = 4 + 2 + 8 + 8;
constexpr std::size_t kTrailerSize = 4;

}  // namespace

PrimeStore make_prime_store(std::uint64_t limit, std::vector<std::uint32_t> primes) {
    if (limit < 2) throw DomainError("prime store limit must be at least 2");
    if (limit > kMaxSieveLimit) throw DomainError("prime store limit must be below 2^32");
    if (primes.empty() || primes.front() != 2)
        throw DomainError("prime sequence must start with 2");
    for (std::size_t i = 1; i < primes.size(); ++i)
        if (primes[i] <= primes[i - 1]) throw DomainError("prime sequence must be strictly increasing");
    if (primes.back() > limit) throw DomainError("prime sequence exceeds the limit");

    PrimeStore store;
    store.limit_ = limit;
    store.primes_ = std::move(primes);
    return store;
}

std::uint64_t PrimeStore::count_primes_upto(std::uint64_t n) const {
    if (n > limit_)
        throw OutOfRangeError("pi(" + std::to_string(n) + ") requested beyond sieve limit " +
                              std::to_string(limit_));
    return static_cast<std::uint64_t>(std::upper_bound(primes_.begin(), primes_.end(), n) -
                                      primes_.begin());
}

std::uint64_t PrimeStore::count_primes(double y) const {
    if (y > static_cast<double>(limit_))
        throw OutOfRangeError("pi(y) requested beyond sieve limit " + std::to_string(limit_));
    return count_primes_upto(floor_nonnegative(y, "y"));
}

std::span<const std::uint32_t> PrimeStore::primes_in_range(double lo, double hi) const {
    if (!(lo >= 0.0)) throw DomainError("range start must be non-negative");
    if (lo > hi) throw DomainError("range start exceeds range end");
    if (hi > static_cast<double>(limit_))
        throw OutOfRangeError("range end beyond sieve limit " + std::to_string(limit_));
    // u32 values are exact in double, so comparing as doubles is exact.
    auto first = std::partition_point(primes_.begin(), primes_.end(),
                                      [lo](std::uint32_t p) { return static_cast<double>(p) < lo; });
    auto last = std::partition_point(first, primes_.end(),
                                     [hi](std::uint32_t p) { return static_cast<double>(p) < hi; });
    return {std::to_address(first), static_cast<std::size_t>(last - first)};
}

std::span<const std::uint32_t> PrimeStore::primes_upto(std::uint64_t n) const {
    return std::span<const std::uint32_t>(primes_).first(count_primes_upto(n));
}

bool PrimeStore::is_prime(std::uint64_t n) const {
    if (n > limit_) throw OutOfRangeError("primality query beyond sieve limit");
    return std::binary_search(primes_.begin(), primes_.end(), n);
}

PrimeStore build_prime_store(std::uint64_t limit, const SieveOptions& options) {
    if (limit < 2) throw DomainError("sieve limit must be at least 2");
    if (limit > kMaxSieveLimit) throw DomainError("sieve limit must be below 2^32");
    if (options.segment_size < 64) throw DomainError("segment size must be at least 64 bytes");

    const std::vector<std::uint32_t> base = small_primes(isqrt(limit));

    SegmentPlan plan;
    plan.limit = limit;
    plan.odd_count = (limit + 1) / 2;
    plan.bits_per_segment = (options.segment_size + 7) / 8 * 64;
    plan.segments = (plan.odd_count + plan.bits_per_segment - 1) / plan.bits_per_segment;

    const unsigned threads =
        static_cast<unsigned>(std::min<std::uint64_t>(resolve_threads(options.threads), plan.segments));
    MemoryMeter meter(options.memory_budget);
    meter.charge(base.size() * sizeof(std::uint32_t) + threads * plan.bits_per_segment / 8, 0, 1,
                 std::min<std::uint64_t>(limit, 2 * plan.bits_per_segment - 1));

    std::vector<std::vector<std::uint32_t>> chunks(threads);
    chunks[0].push_back(2);
    parallel_for(threads, threads, [&](std::size_t t) {
        const std::uint64_t first = plan.segments * t / threads;
        const std::uint64_t last = plan.segments * (t + 1) / threads;
        // pi(n) < 1.26 n / log n; reserving avoids regrowth of large chunks.
        const double top = std::min(static_cast<double>(limit), 2.0 * static_cast<double>(last * plan.bits_per_segment));
        const double span = top - 2.0 * static_cast<double>(first * plan.bits_per_segment);
        if (span > 0) chunks[t].reserve(static_cast<std::size_t>(1.26 * span / std::log(std::max(top, 17.0))) + 16);
        sieve_segments(plan, base, first, last, meter, chunks[t]);
    });
    if (threads == 1) return make_prime_store(limit, std::move(chunks[0]));

    std::vector<std::uint32_t> primes;
    std::size_t total = 0;
    for (const auto& c : chunks) total += c.size();
    primes.reserve(total);
    for (auto& c : chunks) {
        primes.insert(primes.end(), c.begin(), c.end());
        std::vector<std::uint32_t>().swap(c);
    }
    return make_prime_store(limit, std::move(primes));
}

std::vector<std::uint8_t> encode_cache(const PrimeStore& store) {
    std::vector<std::uint8_t> out;
    out.reserve(kHeaderSize + store.size() + kTrailerSize + 64);
    for (auto byte : kMagic) out.push_back(byte);
    put_u16(out, kCacheVersion);
    put_u64(out, store.limit());
    put_u64(out, store.size());

    std::uint32_t previous = 0;
    for (std::uint32_t p : store.primes()) {
        const std::uint32_t gap = p - previous;
        if (gap % 2 == 0 && gap / 2 >= 1 && gap / 2 <= 255) {
            out.push_back(static_cast<std::uint8_t>(gap / 2));
        } else {
            out.push_back(0);
            put_u32(out, gap);
        }
        previous = p;
    }
    put_u32(out, crc32_of(out));
    return out;
}

PrimeStore decode_cache(std::span<const std::uint8_t> bytes, std::optional<std::uint64_t> expected_limit) {
    if (bytes.size() < kMagic.size() || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin()))
        throw FormatError("bad magic bytes, not a prime cache", 0);
    if (bytes.size() < kHeaderSize + kTrailerSize)
        throw FormatError("truncated header", bytes.size());

    const std::size_t body_end = bytes.size() - kTrailerSize;
    const auto stored_crc = static_cast<std::uint32_t>(get_le(bytes, body_end, 4));
    if (crc32_of(bytes.first(body_end)) != stored_crc)
        throw FormatError("checksum mismatch", body_end);

    const auto version = static_cast<std::uint16_t>(get_le(bytes, 4, 2));
    if (version != kCacheVersion)
        throw VersionError("unsupported cache version " + std::to_string(version));
    const std::uint64_t limit = get_le(bytes, 6, 8);
    const std::uint64_t count = get_le(bytes, 14, 8);
    if (expected_limit && *expected_limit != limit)
        throw VersionError("cache built for limit " + std::to_string(limit) + ", requested " +
                           std::to_string(*expected_limit));
    if (limit < 2 || limit > kMaxSieveLimit) throw FormatError("limit out of range", 6);
    if (count > body_end - kHeaderSize) throw FormatError("prime count exceeds stream length", 14);

    std::vector<std::uint32_t> primes;
    primes.reserve(count);
    std::size_t offset = kHeaderSize;
    std::uint64_t previous = 0;
    for (std::uint64_t i = 0; i < count; ++i) {
        if (offset >= body_end) throw FormatError("delta stream ended early", offset);
        std::uint64_t gap = bytes[offset++];
        if (gap == 0) {
            if (offset + 4 > body_end) throw FormatError("truncated escaped gap", offset);
            gap = get_le(bytes, offset, 4);
            offset += 4;
        } else {
            gap *= 2;
        }
        if (gap == 0) throw FormatError("zero gap in delta stream", offset);
        previous += gap;
        if (previous > limit) throw FormatError("prime exceeds recorded limit", offset);
        primes.push_back(static_cast<std::uint32_t>(previous));
    }
    if (offset != body_end) throw FormatError("trailing bytes after delta stream", offset);
    try {
        return make_prime_store(limit, std::move(primes));
    } catch (const DomainError& e) {
        throw FormatError(std::string("inconsistent prime sequence: ") + e.what(), kHeaderSize);
    }
}

void save_cache(const PrimeStore& store, const std::filesystem::path& path) {
    const auto bytes = encode_cache(store);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ResourceError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ResourceError("write failed for " + path.string());
}

PrimeStore load_cache(const std::filesystem::path& path, std::optional<std::uint64_t> expected_limit) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ResourceError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_cache(bytes, expected_limit);
}

}  // namespace bvlab
