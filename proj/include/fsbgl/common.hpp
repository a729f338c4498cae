#pragma once
// Shared error types and deterministic RNG utilities.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <string>

namespace fsbgl {

// Bad user input: parameters outside their domain, malformed requests.
struct domain_error : std::runtime_error {
  explicit domain_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure: factorization breakdown, non-finite values, divergence.
struct numerical_error : std::runtime_error {
  explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem / parse failure.
struct io_error : std::runtime_error {
  explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

// splitmix64: stateless seed mixer, used to derive independent per-task
// streams from a master seed without correlation between adjacent seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d4ecb9aa1f0327ULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(master ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

// 17 significant digits: enough for a double to round-trip through text.
inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Deterministic generator: a fresh Rng(seed) always produces the same
// sequence (mt19937_64 is pinned by the standard; normal() uses an explicit
// Box-Muller so no library-dependent distribution state is involved).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform() {  // [0, 1)
    return (gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  int uniform_int(int lo, int hi) {  // inclusive bounds, via rejection
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t r;
    do {
      r = gen_();
    } while (r >= limit);
    return lo + static_cast<int>(r % span);
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace fsbgl
