// Copyright 2026 The medtk Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MEDTK_TESTS_SUPPORT_HPP
#define MEDTK_TESTS_SUPPORT_HPP

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "medtk/util.hpp"

namespace medtk::test {

inline std::string fixture_path(const std::string& name) {
  return std::string(MEDTK_TEST_DIR) + "/fixtures/" + name;
}

inline std::string golden_path(const std::string& name) {
  return std::string(MEDTK_TEST_DIR) + "/golden/" + name;
}

inline std::string read_fixture(const std::string& name) {
  return util::read_file(fixture_path(name));
}

inline std::string read_golden(const std::string& name) {
  return util::read_file(golden_path(name));
}

// Scratch directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    auto base = std::filesystem::temp_directory_path();
    for (int attempt = 0;; ++attempt) {
      auto candidate = base / ("medtk-test-" + std::to_string(::getpid()) + "-" +
                               std::to_string(counter()++));
      std::error_code ec;
      if (std::filesystem::create_directory(candidate, ec)) {
        path_ = candidate;
        return;
      }
      if (attempt > 100) throw std::runtime_error("cannot create temp dir");
    }
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  std::string dir() const { return path_.string(); }

 private:
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::filesystem::path path_;
};

// Deterministic draws independent of the standard library's distribution
// implementations (Box-Muller on top of raw mt19937_64 output).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() {  // [0, 1)
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t integer(std::uint64_t lo, std::uint64_t hi) {  // inclusive
    return lo + engine_() % (hi - lo + 1);
  }

  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform(), u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Gaussian elimination with partial pivoting; oracle for the closed-form
// inverse-Hessian products.
inline std::vector<double> dense_solve(std::vector<std::vector<double>> a,
                                       std::vector<double> b) {
  std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (std::size_t r = col + 1; r < n; ++r) {
      double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a[i][c] * x[c];
    x[i] = s / a[i][i];
  }
  return x;
}

}  // namespace medtk::test

#endif  // MEDTK_TESTS_SUPPORT_HPP
