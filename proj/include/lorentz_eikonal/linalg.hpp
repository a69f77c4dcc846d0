// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>

#include <Eigen/Dense>

namespace lorentz_eikonal {

inline constexpr int kMaxDim = 4;

// Small dynamically sized vectors and matrices; storage is inline (dim <= 4).
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

// Connection coefficients indexed as gamma[k](i, j) = Gamma^k_ij.
struct Christoffel {
  int dim = 0;
  std::array<Mat, kMaxDim> upper;

  double operator()(int k, int i, int j) const { return upper[k](i, j); }
};

}  // namespace lorentz_eikonal
