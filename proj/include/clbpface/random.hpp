#pragma once

#include <cstdint>
#include <limits>

namespace clbpface {

/// SplitMix64 finalizer (Steele, Lea, Flood 2014).
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Folds several words into one stream key: k = splitmix64(k ^ w) per word,
/// starting from k = 0.
constexpr std::uint64_t hash_words(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    std::uint64_t k = splitmix64(a);
    k = splitmix64(k ^ b);
    return splitmix64(k ^ c);
}

/// Counter-based generator: the i-th output of stream `key` is
/// splitmix64(key + i * 0x9e3779b97f4a7c15). Reproducible in any language.
class CounterRng {
public:
    explicit constexpr CounterRng(std::uint64_t key) : key_(key) {}

    constexpr std::uint64_t next() {
        return splitmix64(key_ + (counter_++) * 0x9e3779b97f4a7c15ULL);
    }

    /// Uniform in [0, bound) by rejection of the biased tail.
    constexpr std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit =
            std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
        std::uint64_t x = next();
        while (x >= limit) x = next();
        return x % bound;
    }

    /// Uniform in [0, 1) with 53 random bits.
    constexpr double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace clbpface
