#pragma once

// Deterministic randomness utilities.  Child seeds are derived from a master
// seed with splitmix64 over a tag, so a given (config, seed) pair produces the
// same draws no matter how the work is scheduled across threads or processes.
// Normal variates use an explicit Box-Muller over mt19937_64 raw bits instead
// of std::normal_distribution, whose draw order is implementation-defined.

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace flr {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Mix a master seed with a textual tag and an index into a child seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                 std::uint64_t index = 0) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a over the tag
    for (unsigned char c : tag) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return splitmix64(master ^ splitmix64(h) ^ splitmix64(index * 0x9e3779b97f4a7c15ULL + 1));
}

/// Seeded stream of iid draws with a fully specified order.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : eng_(seed) {}

    /// Uniform on (0,1), strictly interior.
    double uniform() {
        return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal (Box-Muller, cosine branch; one normal per two uniforms).
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    /// Uniform integer in [0, n), unbiased via rejection.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t r;
        do {
            r = eng_();
        } while (r >= limit);
        return r % n;
    }

    /// Random sign, +1 or -1.
    int sign() { return (eng_() & 1u) ? 1 : -1; }

private:
    std::mt19937_64 eng_;
};

/// In-place Fisher-Yates shuffle with explicit draw order.
template <typename T>
void deterministic_shuffle(std::vector<T>& v, RandomStream& rs) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rs.below(i));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace flr
