#pragma once

#include <array>
#include <cstdint>

namespace splitsde {

/// Philox4x64-10 block function (Salmon et al., Random123).
std::array<std::uint64_t, 4> philox4x64(std::array<std::uint64_t, 4> counter,
                                        std::array<std::uint64_t, 2> key);

/// SplitMix64 finalizer; used to derive sub-seeds from a master seed.
std::uint64_t splitmix64(std::uint64_t x);

/// Sub-seed for a named role: splitmix64(seed ^ splitmix64(tag)).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

/// Counter-based random stream.
///
/// Block b of stream s under seed k is philox4x64({b, s, 0, 0}, {k, 0}).
/// Each block yields four 64-bit words, i.e. four uniforms or four normals
/// (two Box-Muller pairs). A stream is therefore a pure function of
/// (seed, stream id) and never shares state with other streams.
class CounterRng {
  public:
    CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept;

    std::uint64_t next_u64() noexcept;
    /// Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform() noexcept;
    double normal() noexcept;

    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] std::uint64_t stream() const noexcept { return stream_; }
    [[nodiscard]] std::uint64_t blocks_used() const noexcept { return block_; }

  private:
    void refill() noexcept;

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint64_t, 4> words_{};
    int word_pos_ = 4;
    std::array<double, 4> normals_{};
    int normal_pos_ = 4;
};

} // namespace splitsde
