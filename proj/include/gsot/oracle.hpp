// Independent reference computations used to validate the closed-form
// solver: a one-dimensional profit argmax, a dense profit maximizer over
// correlation factors, a brute-force relative-entropy evaluation from the
// joint covariance, and the unregularized quadratic transport distance.
// Everything here deliberately avoids the shrinkage formulas.
#pragma once

#include "gsot/spectral.hpp"

namespace gsot {

struct OracleConfig {
  int max_iterations = 20000;
  double tolerance = 1e-8;
  double step_size = 1e-3;  // initial ascent step, adapted on the fly
  unsigned long long seed = 0;
  int grid_points = 257;
};

// Argmax over s in [0, 1) of 2 lambda s + eps log(1 - s^2), located by
// golden-section search plus a Newton polish on the stationarity
// equation. Requires eps > 0.
double scalar_argmax(double lambda, double eps, const OracleConfig& config = {});

// Profit functional over correlation factors R with spectral norm < 1:
//   P(R) = 2 tr(R M^T G) + eps sum_j log(1 - sigma_j(R)^2).
double profit_value(const Matrix& R, const Matrix& G, const Matrix& M,
                    double eps);

// Euclidean gradient 2 G^T M - 2 eps R (I - R^T R)^{-1}.
Matrix profit_gradient(const Matrix& R, const Matrix& G, const Matrix& M,
                       double eps);

struct ProfitMaxResult {
  Matrix R;
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
  double grad_norm = 0.0;
};

// Gradient ascent with Barzilai-Borwein steps, backtracking, and a
// singular-value clip keeping the iterate strictly inside the unit ball.
ProfitMaxResult profit_maximizer(const Matrix& G, const Matrix& M, double eps,
                                 const OracleConfig& config = {});

// KL(N(0, sigma) || N(0, blockdiag(A, B))) evaluated directly from the
// whitened difference, with no use of the shrinkage spectrum. Throws
// SingularRegime when the divergence is infinite.
double kl_bruteforce(const Matrix& sigma, const Matrix& A, const Matrix& B,
                     double tol = kDefaultRankTol);

// Squared quadratic transport distance between centered Gaussians.
double w2_direct(const Matrix& S1, const Matrix& S2);

}  // namespace gsot
