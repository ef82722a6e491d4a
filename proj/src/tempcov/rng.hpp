#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace tempcov {

// splitmix64 step; used for seeding and key mixing.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// xoshiro256** 1.0.  Tiny state, fast construction, good statistical quality;
// the training loop derives a fresh stream per (step, period) so generator
// setup cost matters as much as throughput.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64_next(sm);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~static_cast<result_type>(0); }

  result_type operator()() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4];
};

// Well-known stream tags so independent consumers of the same user seed never
// collide.  Values are arbitrary but frozen: streams are part of the
// reproducibility contract.
enum class StreamTag : std::uint64_t {
  kWeightsInit = 1,   // random initial factor weights
  kAnnealNoise = 2,   // data annealing noise, keyed further by (step, period)
  kLatentNoise = 3,   // additive factor noise, keyed further by (step, period)
  kInitFit = 4,       // sub-seed for the pooled initialization fit
  kModelFirst = 5,    // synthetic: first latent factor model
  kModelSecond = 6,   // synthetic: second latent factor model
  kSwitchTimes = 7,   // synthetic: per-variable parent switch times
  kSamples = 8,       // synthetic: data draws, keyed further by (period, split)
};

// Deterministic RNG stream derived from a user seed plus a tag path.
class Rng {
 public:
  explicit Rng(std::uint64_t raw_seed) : gen_(raw_seed) {}

  static std::uint64_t derive_key(std::uint64_t seed,
                                  std::initializer_list<std::uint64_t> path) {
    std::uint64_t key = seed;
    for (std::uint64_t part : path) {
      std::uint64_t mix = key ^ (0x9e3779b97f4a7c15ULL + part);
      key = splitmix64_next(mix);
    }
    return key;
  }

  static Rng stream(std::uint64_t seed,
                    std::initializer_list<std::uint64_t> path) {
    return Rng(derive_key(seed, path));
  }

  double normal() { return normal_(gen_); }
  double uniform() { return uniform_(gen_); }  // [0, 1)

  // Uniform integer on the inclusive range [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(gen_);
  }

  // Fills in storage order (column-major), independent of the ref's stride.
  void fill_normal(Eigen::Ref<Eigen::MatrixXd> out) {
    for (Eigen::Index c = 0; c < out.cols(); ++c)
      for (Eigen::Index r = 0; r < out.rows(); ++r) out(r, c) = normal_(gen_);
  }

  Xoshiro256& generator() { return gen_; }

 private:
  Xoshiro256 gen_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

inline std::uint64_t tag(StreamTag t) { return static_cast<std::uint64_t>(t); }

}  // namespace tempcov
