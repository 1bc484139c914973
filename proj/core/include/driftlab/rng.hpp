#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace driftlab {

// All randomness in the pipeline flows from one master seed through named
// substreams, so each component (generator, net init, svm shuffle, ...) is
// independently reproducible. mt19937_64 output is pinned by the standard;
// the distribution helpers below avoid std::uniform_* because those are
// implementation-defined and would break bit-level determinism.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_stream_name(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Child seed for a named substream, optionally indexed (e.g. per class,
// per iteration).
inline std::uint64_t substream_seed(std::uint64_t master, std::string_view name,
                                    std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t s = splitmix64(master ^ hash_stream_name(name));
  s = splitmix64(s ^ (a * 0x9e3779b97f4a7c15ULL + 1));
  s = splitmix64(s ^ (b * 0xd1b54a32d192ed03ULL + 2));
  return s;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1), 53 bits of mantissa.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Modulo bias is irrelevant here; what matters
  // is that the mapping is identical on every platform.
  std::uint64_t below(std::uint64_t n) { return n ? engine_() % n : 0; }

  // Standard normal via Box-Muller; the spare value is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  // Poisson by inversion; fine for the small means used in tag generation.
  int poisson(double mean) {
    if (mean <= 0.0) return 0;
    const double limit = std::exp(-mean);
    double p = uniform();
    int k = 0;
    while (p > limit && k < 10000) {
      p *= uniform();
      ++k;
    }
    return k;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace driftlab
