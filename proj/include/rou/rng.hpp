/*
  Counter-based random streams.

  Every random quantity in the library is a pure function of
  (seed, stream id, counter): there is no generator state to share, so
  trajectories can run in any order or on any number of workers and still
  produce bit-identical output. The block cipher is Philox4x32-10
  (Salmon et al., SC'11); normals come from Box-Muller on 53-bit uniforms,
  which unlike std::normal_distribution is portable across standard libraries.
*/
#pragma once

#include <array>
#include <cstdint>

namespace rou {

using Philox4x32Counter = std::array<std::uint32_t, 4>;
using Philox4x32Key = std::array<std::uint32_t, 2>;

Philox4x32Counter philox4x32(Philox4x32Counter ctr, Philox4x32Key key);

// SplitMix64 finalizer; used to fold identifiers into stream keys.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) { return mix64(a ^ mix64(b)); }

// Stream domains keep coefficient randomness, Wiener increments and initial
// conditions in disjoint key spaces.
enum class StreamDomain : std::uint64_t {
  Coefficients = 0x41,
  Noise = 0x57,
  InitialState = 0x58,
  Test = 0x54,
};

std::uint64_t derive_stream(StreamDomain domain, std::uint64_t index);

class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t substream = 0);

  // Two uniforms in the open interval (0, 1) from block `counter`.
  std::array<double, 2> uniforms(std::uint64_t counter) const;
  // Two independent standard normals from block `counter`.
  std::array<double, 2> normals(std::uint64_t counter) const;

  double uniform(std::uint64_t counter) const { return uniforms(counter)[0]; }
  double normal(std::uint64_t counter) const { return normals(counter)[0]; }

 private:
  Philox4x32Key key_{};
  std::uint32_t hi_ = 0;
};

}  // namespace rou
