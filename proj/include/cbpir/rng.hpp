#pragma once

#include <cstdint>
#include <random>

namespace cbpir {

// All randomness in the library flows through this class so that every
// sampling path is reproducible from a single 64-bit seed. std::mt19937_64
// output is specified bit-exactly by the standard; the derived draws below
// avoid std::uniform_int_distribution, whose mapping is not portable.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t u64() { return gen_(); }

    // uniform on [0, n), n > 0, by rejection
    std::uint32_t below(std::uint32_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return static_cast<std::uint32_t>(x % n);
    }

    // uniform on [1, n)
    std::uint32_t below_nonzero(std::uint32_t n) { return 1u + below(n - 1u); }

    bool coin() { return (gen_() >> 63) != 0; }

  private:
    std::mt19937_64 gen_;
};

// splitmix64 step; used to derive independent child seeds (per trial, per
// query) from one master seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1u);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

} // namespace cbpir
