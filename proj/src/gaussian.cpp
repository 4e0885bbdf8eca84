#include "gsot/gaussian.hpp"

#include <cmath>
#include <sstream>

#include "gsot/random.hpp"

namespace gsot {

Covariance::Covariance(const Matrix& S, double rank_tolerance) {
  spectrum_ = eigh(S, rank_tolerance);
  double top = std::max(spectrum_.eigenvalues[0], 0.0);
  double bottom = spectrum_.eigenvalues[spectrum_.eigenvalues.size() - 1];
  if (bottom < -rank_tolerance * top) {
    std::ostringstream msg;
    msg << "covariance: eigenvalue " << bottom << " below -"
        << rank_tolerance * top;
    throw NotPSD(msg.str());
  }
  matrix_ = 0.5 * (S + S.transpose());
  for (Eigen::Index j = 0; j < spectrum_.eigenvalues.size(); ++j) {
    trace_ += std::max(spectrum_.eigenvalues[j], 0.0);
  }
}

double Covariance::top_eigenvalue() const {
  if (spectrum_.eigenvalues.size() == 0) return 0.0;
  return std::max(spectrum_.eigenvalues[0], 0.0);
}

Matrix Covariance::sqrt_matrix() const {
  return apply_fn(spectrum_, [](double x) { return std::sqrt(x); });
}

Matrix Covariance::pinv_sqrt_matrix() const {
  double thresh = spectrum_.rank_tolerance * top_eigenvalue();
  return apply_fn(spectrum_, [thresh](double x) {
    return x > thresh ? 1.0 / std::sqrt(x) : 0.0;
  });
}

CovariancePtr covariance(const Matrix& S, double rank_tolerance) {
  return std::make_shared<Covariance>(S, rank_tolerance);
}

GreenFactor green_factor(CovariancePtr parent, FactorMethod method,
                         unsigned long long seed) {
  GreenFactor out;
  out.parent = parent;
  switch (method) {
    case FactorMethod::symmetric_sqrt:
      out.G = parent->sqrt_matrix();
      break;
    case FactorMethod::pivoted_cholesky:
      out.G = pivoted_cholesky(parent->matrix(),
                               parent->spectrum().rank_tolerance,
                               parent->top_eigenvalue());
      break;
    case FactorMethod::eigen_scaled: {
      out.G = parent->sqrt_matrix();
      if (seed != 0) {
        std::mt19937_64 rng(seed);
        out.G = out.G * random_orthogonal(parent->dim(), rng);
      }
      break;
    }
  }
  return out;
}

double AlignedPair::cross_scale() const {
  double top = cross_spectrum.eigenvalues.size() > 0
                   ? std::max(cross_spectrum.eigenvalues[0], 0.0)
                   : 0.0;
  double marginal = std::sqrt(G.parent->top_eigenvalue() *
                              M.parent->top_eigenvalue());
  return std::max(top, marginal);
}

namespace {

// Shared alignment core. Returns K = M V_r U_r^T (the factor of B seen
// by G) and the anchored root L of the residual B - K K^T.
struct AlignmentCore {
  Matrix K;
  Matrix L;        // d x d, rank-truncated
  int residual_rank = 0;
  double cross_asymmetry = 0.0;
  double residual_leak = 0.0;  // largest entry of G^T L
};

AlignmentCore align_core(const GreenFactor& Gf, const GreenFactor& Mf) {
  const Matrix& G = Gf.G;
  const Matrix& M = Mf.G;
  const Matrix& B = Mf.parent->matrix();
  double b_top = Mf.parent->top_eigenvalue();
  double tol = Mf.parent->spectrum().rank_tolerance;

  Matrix X = G.transpose() * M;
  Eigen::BDCSVD<Matrix> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  double top = sv.size() > 0 ? sv[0] : 0.0;
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < sv.size(); ++j) {
    if (sv[j] > tol * top) ++k;
  }

  AlignmentCore core;
  core.K = Matrix::Zero(M.rows(), G.cols());
  if (k > 0) {
    core.K = M * svd.matrixV().leftCols(k) *
             svd.matrixU().leftCols(k).transpose();
  }

  Matrix S_res = B - core.K * core.K.transpose();
  S_res = 0.5 * (S_res + S_res.transpose()).eval();
  try {
    core.L = psd_sqrt(S_res, tol, b_top > 0.0 ? b_top : 1.0);
  } catch (const NegativeEigenvalue& e) {
    throw AlignmentResidual(std::string("align: residual factor failed: ") +
                            e.what());
  }
  core.residual_rank = eigh(core.L).numerical_rank;

  Matrix cross_raw = G.transpose() * core.K;
  core.cross_asymmetry =
      (cross_raw - cross_raw.transpose()).cwiseAbs().maxCoeff();
  if (core.L.size() > 0) {
    core.residual_leak = (G.transpose() * core.L).cwiseAbs().maxCoeff();
  }
  return core;
}

}  // namespace

AlignedPair align(const GreenFactor& Gf, const GreenFactor& M_init) {
  AlignmentCore core = align_core(Gf, M_init);

  AlignedPair pair;
  pair.G = Gf;

  // The residual columns carry the part of B orthogonal to the range of
  // G; the cross against them is identically zero, so appending them
  // keeps the core square and symmetric.
  Matrix L_cols = Matrix::Zero(core.K.rows(), 0);
  if (core.residual_rank > 0) {
    Matrix Lfull = pivoted_cholesky(
        core.L * core.L.transpose(), M_init.parent->spectrum().rank_tolerance,
        M_init.parent->top_eigenvalue());
    L_cols = Lfull.leftCols(core.residual_rank);
  }
  Matrix M_new(core.K.rows(), core.K.cols() + L_cols.cols());
  M_new << core.K, L_cols;
  pair.M = GreenFactor{M_new, M_init.parent};

  Matrix cross_raw = Gf.G.transpose() * core.K;
  pair.cross = 0.5 * (cross_raw + cross_raw.transpose());
  pair.cross_spectrum = eigh(pair.cross);
  pair.asymmetry = std::max(core.cross_asymmetry, core.residual_leak);

  if (pair.asymmetry > 1e-8 * std::max(pair.cross_scale(), 1e-300)) {
    std::ostringstream msg;
    msg << "align: cross asymmetry " << pair.asymmetry
        << " exceeds 1e-8 * " << pair.cross_scale();
    throw AlignmentResidual(msg.str());
  }
  return pair;
}

AlignedPair canonical_pair(CovariancePtr A, CovariancePtr B) {
  GreenFactor G0 = green_factor(A, FactorMethod::symmetric_sqrt);
  GreenFactor M_init = green_factor(B, FactorMethod::symmetric_sqrt);
  AlignmentCore core = align_core(G0, M_init);

  // G0 is symmetric, so the residual root annihilates the row space of
  // K and the square sum below is again a factor of B.
  AlignedPair pair;
  pair.G = G0;
  pair.M = GreenFactor{core.K + core.L, B};
  pair.canonical = true;

  Matrix cross_raw = G0.G.transpose() * pair.M.G;
  pair.cross = 0.5 * (cross_raw + cross_raw.transpose());
  pair.cross_spectrum = eigh(pair.cross);
  pair.asymmetry = std::max(core.cross_asymmetry, core.residual_leak);

  if (pair.asymmetry > 1e-8 * std::max(pair.cross_scale(), 1e-300)) {
    std::ostringstream msg;
    msg << "canonical_pair: cross asymmetry " << pair.asymmetry
        << " exceeds 1e-8 * " << pair.cross_scale();
    throw AlignmentResidual(msg.str());
  }
  return pair;
}

SchurData schur_data(CovariancePtr A, CovariancePtr B) {
  const SymmetricSpectrum& spec = A->spectrum();
  SchurData data;
  data.basis = spec.eigenvectors;
  data.r = spec.numerical_rank;
  data.a_range = spec.eigenvalues.head(data.r).cwiseMax(0.0);

  Eigen::Index d = A->dim();
  Matrix Bbar = data.basis.transpose() * B->matrix() * data.basis;
  Bbar = 0.5 * (Bbar + Bbar.transpose()).eval();
  data.B11 = Bbar.topLeftCorner(data.r, data.r);
  data.B12 = Bbar.topRightCorner(data.r, d - data.r);
  data.B22 = Bbar.bottomRightCorner(d - data.r, d - data.r);

  Vector root = data.a_range.cwiseSqrt();
  data.P11 = root.asDiagonal() * data.B11 * root.asDiagonal();
  data.P11 = 0.5 * (data.P11 + data.P11.transpose()).eval();

  Matrix half = pinv_sqrt(data.B11, kDefaultRankTol, B->top_eigenvalue()) *
                data.B12;
  data.schur = data.B22 - half.transpose() * half;
  data.schur = 0.5 * (data.schur + data.schur.transpose()).eval();
  return data;
}

bool SchurData::schur_is_zero(double tol) const {
  if (schur.size() == 0) return true;
  double scale = std::max(B11.size() > 0 ? B11.cwiseAbs().maxCoeff() : 0.0,
                          B22.cwiseAbs().maxCoeff());
  if (scale == 0.0) return true;
  return schur.cwiseAbs().maxCoeff() <= tol * scale;
}

bool reachable(CovariancePtr A, CovariancePtr B) {
  return A->rank() >= B->rank();
}

double bures_w2_squared(CovariancePtr A, CovariancePtr B) {
  Matrix root = A->sqrt_matrix();
  Matrix P = root * B->matrix() * root;
  SymmetricSpectrum spec = eigh(0.5 * (P + P.transpose()));
  double cross = 0.0;
  for (Eigen::Index j = 0; j < spec.eigenvalues.size(); ++j) {
    cross += std::sqrt(std::max(spec.eigenvalues[j], 0.0));
  }
  return std::max(A->trace() + B->trace() - 2.0 * cross, 0.0);
}

double Coupling::transport_cost() const {
  return A_block().trace() + B_block().trace() - 2.0 * C_block().trace();
}

void Coupling::validate(double tol) {
  SymmetricSpectrum spec = eigh(sigma, tol);
  double top = std::max(spec.eigenvalues[0], 0.0);
  double bottom = spec.eigenvalues[spec.eigenvalues.size() - 1];
  if (bottom < -tol * top) {
    std::ostringstream msg;
    msg << "coupling: joint eigenvalue " << bottom << " below -" << tol * top;
    throw NotPSD(msg.str());
  }
  validated = true;
}

namespace {

Coupling assemble_coupling(const Matrix& A, const Matrix& B, const Matrix& C) {
  Coupling coupling;
  coupling.d = A.rows();
  coupling.sigma = Matrix::Zero(2 * coupling.d, 2 * coupling.d);
  coupling.sigma.topLeftCorner(coupling.d, coupling.d) = A;
  coupling.sigma.bottomRightCorner(coupling.d, coupling.d) = B;
  coupling.sigma.topRightCorner(coupling.d, coupling.d) = C;
  coupling.sigma.bottomLeftCorner(coupling.d, coupling.d) = C.transpose();
  return coupling;
}

}  // namespace

Coupling kantorovich_coupling(CovariancePtr A, CovariancePtr B,
                              PlanVariant variant) {
  SchurData data = schur_data(A, B);
  Eigen::Index d = A->dim();
  Eigen::Index r = data.r;
  Eigen::Index q = d - r;
  double tol = kDefaultRankTol;

  Vector a_sqrt = data.a_range.cwiseSqrt();
  Matrix P_half = psd_sqrt(data.P11, tol);
  Matrix P_ihalf = pinv_sqrt(data.P11, tol);

  Matrix M11 = a_sqrt.cwiseInverse().asDiagonal() * P_half;
  Matrix M21 = (P_ihalf * (a_sqrt.asDiagonal() * data.B12)).transpose();
  Matrix M22 = Matrix::Zero(q, q);

  if (variant == PlanVariant::canonical) {
    M22 = psd_sqrt(data.schur, tol, B->top_eigenvalue());
  } else {
    SymmetricSpectrum schur_spec = eigh(data.schur, tol);
    double anchor = std::max(B->top_eigenvalue(), 1e-300);
    int m = numerical_rank(schur_spec.eigenvalues, tol, anchor);

    // Null directions of B11^{1/2} A11^{1/2} inside the range of A can
    // absorb the remainder; enumerate them from the small end of the
    // singular spectrum so the pairing is deterministic.
    Matrix Y = psd_sqrt(data.B11, tol, B->top_eigenvalue()) *
               Matrix(a_sqrt.asDiagonal());
    Eigen::BDCSVD<Matrix> ysvd(Y, Eigen::ComputeFullV);
    const Vector& ysv = ysvd.singularValues();
    double ytop = ysv.size() > 0 ? ysv[0] : 0.0;
    Eigen::Index yrank = 0;
    for (Eigen::Index j = 0; j < ysv.size(); ++j) {
      if (ysv[j] > tol * ytop) ++yrank;
    }
    Eigen::Index nullity = r - yrank;
    if (m > nullity) {
      std::ostringstream msg;
      msg << "kantorovich_coupling: remainder of rank " << m
          << " exceeds cross-null dimension " << nullity;
      throw MongeConstructionFailure(msg.str());
    }
    Matrix N12 = Matrix::Zero(r, q);
    for (int i = 0; i < m; ++i) {
      Vector n = ysvd.matrixV().col(yrank + i);
      Vector w = schur_spec.eigenvectors.col(i);
      N12 += std::sqrt(std::max(schur_spec.eigenvalues[i], 0.0)) * n *
             w.transpose();
    }
    M21 += N12.transpose();
  }

  Matrix Mbar = Matrix::Zero(d, d);
  Mbar.topLeftCorner(r, r) = M11;
  Mbar.bottomLeftCorner(q, r) = M21;
  Mbar.bottomRightCorner(q, q) = M22;

  Matrix Cbar = Matrix::Zero(d, d);
  Cbar.topRows(r) = a_sqrt.asDiagonal() * Mbar.transpose().topRows(r);
  Matrix C = data.basis * Cbar * data.basis.transpose();

  Coupling coupling = assemble_coupling(A->matrix(), B->matrix(), C);
  coupling.validate();
  return coupling;
}

Matrix optimal_map(CovariancePtr A, CovariancePtr B) {
  if (!reachable(A, B)) {
    std::ostringstream msg;
    msg << "optimal_map: rank(A) = " << A->rank() << " < rank(B) = "
        << B->rank();
    throw NotReachable(msg.str());
  }
  SchurData data = schur_data(A, B);
  if (!data.schur_is_zero()) {
    std::ostringstream msg;
    msg << "optimal_map: Schur remainder has norm "
        << data.schur.cwiseAbs().maxCoeff();
    throw SchurNotZero(msg.str());
  }

  Eigen::Index d = A->dim();
  Eigen::Index r = data.r;
  Eigen::Index q = d - r;
  double tol = kDefaultRankTol;

  Vector a_isqrt = data.a_range.cwiseSqrt().cwiseInverse();
  Matrix P_half = psd_sqrt(data.P11, tol);
  Matrix P_ihalf = pinv_sqrt(data.P11, tol);

  Matrix Tbar = Matrix::Zero(d, d);
  Tbar.topLeftCorner(r, r) =
      a_isqrt.asDiagonal() * P_half * Matrix(a_isqrt.asDiagonal());
  Tbar.bottomLeftCorner(q, r) =
      (P_ihalf * (data.a_range.cwiseSqrt().asDiagonal() * data.B12))
          .transpose() *
      Matrix(a_isqrt.asDiagonal());
  return data.basis * Tbar * data.basis.transpose();
}

}  // namespace gsot
