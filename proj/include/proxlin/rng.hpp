#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include <Eigen/Dense>

namespace proxlin {

using Seed = std::uint64_t;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent stream key from a parent seed and a path of indices,
// e.g. derive_seed(master, {trial, iteration}). Deterministic and order-sensitive.
inline Seed derive_seed(Seed parent, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(parent ^ 0x243f6a8885a308d3ULL);
  for (std::uint64_t k : path) h = splitmix64(h ^ splitmix64(k + 0x13198a2e03707344ULL));
  return h;
}

// Stream tags so that ground truth, initialization and batches never share keys.
namespace stream {
inline constexpr std::uint64_t kTrial = 1;
inline constexpr std::uint64_t kGroundTruth = 2;
inline constexpr std::uint64_t kInit = 3;
inline constexpr std::uint64_t kBatch = 4;
}  // namespace stream

class Rng {
 public:
  explicit Rng(Seed seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }

  Eigen::VectorXd normal_vector(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  // Row-major fill so that row i depends only on draws i*cols .. (i+1)*cols-1.
  Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd M(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) M(i, j) = normal();
    return M;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace proxlin
