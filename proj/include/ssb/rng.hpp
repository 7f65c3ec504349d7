#pragma once

#include <array>
#include <cstdint>

namespace ssb {

/// Philox4x32-10 counter-based generator. A generator is identified by a
/// 64-bit key; `split` derives an independent child stream from the key and
/// a child id, so per-sample streams can be created in any order.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    Rng split(std::uint64_t child) const { return Rng(key_, child); }

    std::uint32_t next_u32();
    std::uint64_t next_u64();
    /// Uniform on the open interval (0, 1).
    double uniform();
    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer on the closed range [lo, hi].
    int uniform_int(int lo, int hi);
    bool bernoulli(double p) { return uniform() < p; }
    /// Standard normal via Box-Muller.
    double normal();

    std::uint64_t key() const noexcept { return key_; }

private:
    void refill();

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    std::array<std::uint32_t, 4> block_{};
    int used_ = 4;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// SplitMix64 finalizer; used to derive keys.
std::uint64_t mix64(std::uint64_t x) noexcept;

}  // namespace ssb
