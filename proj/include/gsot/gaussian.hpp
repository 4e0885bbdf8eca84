// Centered-Gaussian covariance handling: validated covariance objects,
// Green factorizations (any G with G G^T = A), alignment of a factor
// pair so the cross matrix G^T M is symmetric PSD, the canonical pair
// built from the symmetric square root, the Schur reduction of B onto
// the null space of A, explicit Kantorovich couplings for the
// unregularized problem, and the optimal transport map when it exists.
#pragma once

#include <memory>

#include "gsot/spectral.hpp"

namespace gsot {

class Covariance {
 public:
  explicit Covariance(const Matrix& S, double rank_tolerance = kDefaultRankTol);

  const Matrix& matrix() const { return matrix_; }
  const SymmetricSpectrum& spectrum() const { return spectrum_; }
  Eigen::Index dim() const { return matrix_.rows(); }
  int rank() const { return spectrum_.numerical_rank; }
  double trace() const { return trace_; }
  double top_eigenvalue() const;
  Matrix sqrt_matrix() const;
  Matrix pinv_sqrt_matrix() const;

 private:
  Matrix matrix_;  // symmetrized input, kept verbatim for exact copies
  SymmetricSpectrum spectrum_;
  double trace_ = 0.0;
};

using CovariancePtr = std::shared_ptr<const Covariance>;

CovariancePtr covariance(const Matrix& S,
                         double rank_tolerance = kDefaultRankTol);

struct GreenFactor {
  Matrix G;
  CovariancePtr parent;
};

enum class FactorMethod { symmetric_sqrt, pivoted_cholesky, eigen_scaled };

// Factor the parent covariance as G G^T. symmetric_sqrt and
// pivoted_cholesky are deterministic; eigen_scaled right-multiplies the
// symmetric root by a seeded random orthogonal matrix (seed 0 keeps the
// identity).
GreenFactor green_factor(CovariancePtr parent, FactorMethod method,
                         unsigned long long seed = 0);

struct AlignedPair {
  GreenFactor G;
  GreenFactor M;
  Matrix cross;  // symmetric PSD core of G^T M, one column block per G
  SymmetricSpectrum cross_spectrum;
  bool canonical = false;
  double asymmetry = 0.0;

  const Matrix& A() const { return G.parent->matrix(); }
  const Matrix& B() const { return M.parent->matrix(); }
  // Scale used to separate genuine cross-spectrum from rounding noise.
  double cross_scale() const;
};

// Replace M_init by an equivalent factor of B whose cross with G is
// symmetric PSD. The update is K = M_init V_r U_r^T from the SVD
// G^T M_init = U S V^T; the part of B invisible to G returns as extra
// columns from the anchored factorization of B - K K^T. Throws
// AlignmentResidual when the symmetrized cross or the residual factor
// is outside tolerance.
AlignedPair align(const GreenFactor& G, const GreenFactor& M_init);

// Canonical aligned pair: G0 is the symmetric root of A and M0 the
// square factor K0 + (B - K0 K0^T)^{1/2}, which is independent of the
// initial factor of B and has cross equal to (A^{1/2} B A^{1/2})^{1/2}.
AlignedPair canonical_pair(CovariancePtr A, CovariancePtr B);

// Blocks of B in the eigenbasis of A, split between the range of A
// (first r coordinates) and its null space, plus the generalized Schur
// complement B22 - B12^T B11^+ B12 living on the null space.
struct SchurData {
  Matrix basis;    // columns: eigenbasis of A, range block first
  int r = 0;       // rank of A
  Vector a_range;  // positive eigenvalues of A, descending
  Matrix B11;
  Matrix B12;
  Matrix B22;
  Matrix schur;
  Matrix P11;  // A11^{1/2} B11 A11^{1/2}

  bool schur_is_zero(double tol = 1e-8) const;
};

SchurData schur_data(CovariancePtr A, CovariancePtr B);

// A linear pushforward of N(0, A) onto N(0, B) exists iff rank(A) >=
// rank(B).
bool reachable(CovariancePtr A, CovariancePtr B);

// Squared quadratic transport distance through the canonical cross
// spectrum: tr A + tr B - 2 tr (A^{1/2} B A^{1/2})^{1/2}.
double bures_w2_squared(CovariancePtr A, CovariancePtr B);

struct Coupling {
  Matrix sigma;  // joint covariance on the product space, 2d x 2d
  Eigen::Index d = 0;
  bool validated = false;

  Eigen::Block<const Matrix> A_block() const {
    return sigma.topLeftCorner(d, d);
  }
  Eigen::Block<const Matrix> B_block() const {
    return sigma.bottomRightCorner(d, d);
  }
  Eigen::Block<const Matrix> C_block() const {
    return sigma.topRightCorner(d, d);
  }
  double transport_cost() const;

  // PSD check of the joint covariance; throws NotPSD on failure.
  void validate(double tol = kDefaultRankTol);
};

enum class PlanVariant { canonical, monge_extremal };

// Optimal unregularized coupling, assembled block-wise in the eigenbasis
// of A. The canonical variant carries the Schur complement as an
// independent Gaussian remainder; monge_extremal absorbs it into the
// correlated part and fails with MongeConstructionFailure when the
// cross-null space is too small to hold it.
Coupling kantorovich_coupling(CovariancePtr A, CovariancePtr B,
                              PlanVariant variant = PlanVariant::canonical);

// Linear map T with T A T^T = B and C = A T^T optimal. Exists iff the
// Schur complement vanishes; throws SchurNotZero otherwise, and
// NotReachable when rank(A) < rank(B).
Matrix optimal_map(CovariancePtr A, CovariancePtr B);

}  // namespace gsot
