#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace gbert {

// Counter-based generator: draw i of a stream with key k is
// splitmix64_mix(k + (i + 1) * 0x9E3779B97F4A7C15). The output depends only on
// (key, counter), so sequences are identical on every platform, and split()
// derives independent child streams without touching the parent.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) noexcept : key_{mix(seed ^ 0x6A09E667F3BCC909ULL)} {}

    std::uint64_t next_u64() noexcept;

    /// Uniform in [0, 1) with 53 bits of precision.
    double uniform() noexcept;

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n) noexcept;

    /// Standard normal draw (Box-Muller, consumes two uniforms).
    double normal() noexcept;

    bool bernoulli(double p) noexcept { return uniform() < p; }

    /// Child stream keyed by (this key, stream). Does not advance this stream.
    [[nodiscard]] Rng split(std::uint64_t stream) const noexcept;

    template <class T>
    void shuffle(std::vector<T>& v) noexcept {
        for (std::size_t i = v.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    std::uint64_t key() const noexcept { return key_; }
    std::uint64_t counter() const noexcept { return counter_; }

    static Rng from_state(std::uint64_t key, std::uint64_t counter) noexcept {
        Rng r;
        r.key_ = key;
        r.counter_ = counter;
        return r;
    }

    static std::uint64_t mix(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

}  // namespace gbert
