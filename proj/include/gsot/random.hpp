// Seeded random matrix helpers shared by the ensemble experiments and
// the randomized factor choices. Everything routes through mt19937_64 so
// a fixed seed reproduces bit-identical matrices across runs.
#pragma once

#include <random>

#include "gsot/spectral.hpp"

namespace gsot {

inline Matrix standard_gaussian(Eigen::Index rows, Eigen::Index cols,
                                std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix G(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      G(i, j) = normal(rng);
    }
  }
  return G;
}

// Haar-ish orthogonal matrix via QR of a Gaussian, with the R diagonal
// sign fixed so the result is deterministic in the seed.
inline Matrix random_orthogonal(Eigen::Index d, std::mt19937_64& rng) {
  Matrix G = standard_gaussian(d, d, rng);
  Eigen::HouseholderQR<Matrix> qr(G);
  Matrix Q = qr.householderQ();
  Matrix R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < d; ++j) {
    if (R(j, j) < 0.0) Q.col(j) = -Q.col(j);
  }
  return Q;
}

// Normalized Wishart plus a ridge: G G^T / d + ridge * I.
inline Matrix wishart_ridge(Eigen::Index d, double ridge,
                            std::mt19937_64& rng) {
  Matrix G = standard_gaussian(d, d, rng);
  Matrix W = G * G.transpose() / static_cast<double>(d);
  W += ridge * Matrix::Identity(d, d);
  return W;
}

}  // namespace gsot
