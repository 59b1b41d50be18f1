#pragma once

#include <array>
#include <cstdint>

namespace brw {

using Philox4x64Counter = std::array<std::uint64_t, 4>;
using Philox4x64Key = std::array<std::uint64_t, 2>;

/// Philox4x64-10 block function (Salmon et al., SC'11). Pure: the same
/// (counter, key) always yields the same four words.
Philox4x64Counter philox4x64_10(Philox4x64Counter counter, Philox4x64Key key);

/// Mixes a parent stream id with a child index into a new stream id.
std::uint64_t derive_stream_id(std::uint64_t parent, std::uint64_t index);

/// Reproducible counter-based random stream.
///
/// The Philox key is (seed, stream_id) and the counter is the block index, so
/// the n-th variate of a stream is a pure function of (seed, stream_id, n).
/// Streams are single-owner and cheap to construct; `split` derives an
/// independent child stream without consuming any output.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream_id)
      : key_{seed, stream_id} {}

  std::uint64_t next_u64() {
    if (pos_ == 4) refill();
    return buffer_[pos_++];
  }

  /// Uniform on (0, 1], 53-bit resolution. Never returns 0, so inverse-CDF
  /// transforms of the form u^{-1/a} and -log(u) are always finite.
  double uniform() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  RandomStream split(std::uint64_t index) const {
    return RandomStream(key_[0], derive_stream_id(key_[1], index));
  }

  std::uint64_t seed() const { return key_[0]; }
  std::uint64_t stream_id() const { return key_[1]; }

 private:
  void refill();

  Philox4x64Key key_;
  std::uint64_t block_ = 0;
  Philox4x64Counter buffer_{};
  int pos_ = 4;
};

/// Convenience constructor matching the replicate convention: replicate i of
/// an experiment seeded with `seed` consumes stream_rng(seed, i).
inline RandomStream stream_rng(std::uint64_t seed, std::uint64_t stream_id) {
  return RandomStream(seed, stream_id);
}

}  // namespace brw
