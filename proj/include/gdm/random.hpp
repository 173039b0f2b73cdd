#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <utility>

namespace gdm {

/// Counter-based, splittable random stream.
///
/// Draw i of a stream with key k is mix(k + (i+1) * golden), so a stream is
/// fully described by (key, counter) and child streams derived by tag are
/// independent of how many draws the parent has made. Uniform conversions are
/// done here rather than through <random> distributions so that results are
/// identical across standard library implementations.
class SeedStream {
public:
    using result_type = std::uint64_t;

    explicit SeedStream(std::uint64_t seed = 0) : key_(mix(seed ^ 0x6a09e667f3bcc909ULL)) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() { return mix(key_ + (++counter_) * kGolden); }

    /// Independent child stream; depends only on this stream's key and the tag.
    [[nodiscard]] SeedStream derive(std::uint64_t tag) const {
        SeedStream child;
        child.key_ = mix(key_ ^ mix(tag + 0x3c6ef372fe94f82bULL));
        return child;
    }

    [[nodiscard]] SeedStream derive(std::string_view tag) const { return derive(fnv1a(tag)); }

    [[nodiscard]] std::uint64_t key() const { return key_; }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [0, n), n > 0, unbiased (rejection on the low range).
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = max() - max() % n;
        std::uint64_t x = (*this)();
        while (x >= limit) x = (*this)();
        return x % n;
    }

    template <class T>
    void shuffle(std::span<T> values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(values[i - 1], values[j]);
        }
    }

    static constexpr std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static constexpr std::uint64_t fnv1a(std::string_view s) {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (char c : s) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ULL;
        }
        return h;
    }

private:
    static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

}  // namespace gdm
