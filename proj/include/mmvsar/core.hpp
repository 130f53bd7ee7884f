#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <complex>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mmvsar {

using Complex = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

// Sorted set of grid indexes (row support, cluster centers, ...).
using IndexSet = std::vector<int>;

constexpr double kPi = 3.141592653589793238462643383279502884;

inline double sinc(double x) {
  if (std::abs(x) < 1e-6) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sin(x) / x;
}

// ||Z||_{1,q} = sum_j ||z_row_j||_q  (rows aggregated by an outer l1 norm).
inline double mixed_norm_12(const CMatrix& z) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < z.rows(); ++j) s += z.row(j).norm();
  return s;
}

inline double mixed_norm_11(const CMatrix& z) {
  return z.cwiseAbs().sum();
}

// ||Z^T||_{2,1} = sqrt(sum_v ||z_col_v||_1^2), the norm in Lemma Cl1.
inline double transpose_norm_21(const CMatrix& z) {
  double s = 0.0;
  for (Eigen::Index v = 0; v < z.cols(); ++v) {
    const double c1 = z.col(v).cwiseAbs().sum();
    s += c1 * c1;
  }
  return std::sqrt(s);
}

inline bool contains(const IndexSet& s, int idx) {
  for (int v : s)
    if (v == idx) return true;
  return false;
}

inline IndexSet sorted_unique(IndexSet s) {
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

inline void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}

// Deterministic RNG used everywhere randomness is needed. Hand-rolled
// (xoshiro256++ seeded through splitmix64, Box-Muller normals) so that
// identical seeds give identical streams on every platform/stdlib.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& word : state_) {
      x += 0x9e3779b97f4a7c15ULL;
      std::uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      word = z ^ (z >> 31);
    }
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1).
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Integer in [0, n).
  int uniform_int(int n) { return int(next_u64() % std::uint64_t(n)); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double mag = std::sqrt(-2.0 * std::log(u1));
    spare_ = mag * std::sin(2.0 * kPi * u2);
    has_spare_ = true;
    return mag * std::cos(2.0 * kPi * u2);
  }

  // Complex Gaussian with E|z|^2 = 1.
  Complex cnormal() {
    const double re = normal();
    const double im = normal();
    return Complex(re, im) / std::sqrt(2.0);
  }

  CMatrix cnormal_matrix(Eigen::Index rows, Eigen::Index cols) {
    CMatrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = cnormal();
    return m;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4] = {};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace mmvsar
