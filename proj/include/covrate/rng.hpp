#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

#include <Eigen/Dense>

namespace covrate {

// Seeded random streams. The engine is std::mt19937_64, whose output sequence
// is fixed by the standard; uniform and normal variates are derived here rather
// than through <random> distributions, which are implementation-defined.
inline constexpr std::string_view kRngAlgorithm = "mt19937_64/splitmix64-stream/polar-normal-v1";

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t index = 0;

  std::uint64_t engine_seed() const { return splitmix64(seed ^ splitmix64(index + 0x632BE59BD9B4E019ULL)); }
  RngStream child(std::uint64_t sub) const { return {engine_seed(), sub}; }
};

class Rng {
 public:
  explicit Rng(RngStream stream) : engine_(stream.engine_seed()) {}
  Rng(std::uint64_t seed, std::uint64_t index) : Rng(RngStream{seed, index}) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    // Row-major fill so the consumed sequence does not depend on storage order.
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal();
    return m;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace covrate
