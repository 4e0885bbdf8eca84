// Closed-form entropic optimal transport between centered Gaussians.
// A SpectralPath freezes the cross spectrum of an aligned factor pair;
// every regularization level is then a scalar shrinkage of that
// spectrum: correlation R_eps, transport cost, relative entropy, and
// the entropic cost all come out in closed form, with no iteration.
#pragma once

#include <optional>
#include <vector>

#include "gsot/gaussian.hpp"

namespace gsot {

struct EotReport {
  double epsilon = 0.0;
  Vector shrunk;               // per-mode correlation s_j = f_eps(lambda_j)
  double transport_cost = 0.0;
  double kl = 0.0;
  double entropic_cost = 0.0;  // transport_cost + 2 eps kl
  double r_trace_norm = 0.0;   // sum of shrunk singular values
  std::optional<double> coupling_distance_sq;
  std::optional<double> bound1;
  std::optional<double> bound2;
};

struct SpectralPath {
  Vector lambdas;  // cross eigenvalues, descending, floored at zero
  double lambda_floor = 0.0;
  double trace_a = 0.0;
  double trace_b = 0.0;
  bool canonical = false;
  bool diagonal = false;  // spectrum-only path, no factor matrices

  // Populated for matrix-backed paths.
  Matrix basis;  // eigenvectors of the cross core
  GreenFactor G;
  GreenFactor M;

  // Cached on canonical paths for the coupling-distance formula.
  Matrix GtG;
  Matrix MtM;
  Matrix GtG_sq;
  Matrix MtM_sq;

  double w2_squared() const { return trace_a + trace_b - 2.0 * lambdas.sum(); }
  Eigen::Index modes() const { return lambdas.size(); }
};

SpectralPath build_path(const AlignedPair& pair);

// Spectrum-only path for commuting marginals sharing the given
// eigenvalues (A = B with cross spectrum lambdas). No floor is applied
// beyond clipping negatives: explicit spectra are taken at face value.
SpectralPath path_from_spectrum(const Vector& lambdas, double trace_a,
                                double trace_b);

// Closed-form report at one regularization level. Requires eps > 0.
EotReport solve_at(const SpectralPath& path, double eps);

std::vector<EotReport> entropic_cost_curve(const SpectralPath& path,
                                           const std::vector<double>& eps_grid);

// Relative entropy of the optimal coupling to the product measure,
// summed per mode in the cancellation-free form log(lambda / (eps s)) / 2.
// Requires eps > 0; the unregularized limit has infinite divergence and
// throws SingularCoupling.
double kl_divergence(const SpectralPath& path, double eps);

// Joint covariance of the optimal coupling at eps >= 0 (eps = 0 gives
// the small-regularization limit plan). Marginal blocks are copied
// verbatim from the parent covariances.
Coupling materialize(const SpectralPath& path, double eps);

// Limit plan of the entropic couplings as eps -> 0, through the
// canonical pair of (A, B).
Coupling limit_coupling(CovariancePtr A, CovariancePtr B);

// Squared quadratic distance between the coupling at eps and the limit
// plan. Closed form through the top-left fourth-moment matrix; only
// canonical (or spectrum-only) paths carry enough structure for it.
double coupling_distance_sq(const SpectralPath& path, double eps);

struct UpperBounds {
  double bound1 = 0.0;  // trace-weighted perturbation bound
  double bound2 = 0.0;  // residual-weight bound
};

// Closed-form upper bounds on coupling_distance_sq. bound1 evaluates the
// perturbation scalar at its positive limit 2 - sqrt(2) on null modes;
// bound2 uses the residual weight, which vanishes there.
UpperBounds upper_bounds(const SpectralPath& path, double eps);

struct CorrelationCheck {
  bool ok = false;
  double spectral_norm = 0.0;
  double null_residual = 0.0;   // mass of R on the null space of M
  double range_residual = 0.0;  // mass of R outside the row space of G
  std::string failure;          // empty when ok
};

// Diagnostics for a candidate correlation factor R with C = G R M^T.
CorrelationCheck validate_correlation(const Matrix& R, const AlignedPair& pair);

// Profit functional of the pair at R, matching the oracle convention.
double profit(const Matrix& R, const AlignedPair& pair, double eps);

}  // namespace gsot
