#include "gsot/spectral.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

namespace gsot {

namespace {

// Cancellation-free complement 1 - f. The direct difference loses half
// the digits once x >> eps; this form is exact algebra on the
// rationalized f and stays accurate over the whole range.
double shrink_complement(double x, double eps) {
  double s = std::hypot(2.0 * x, eps);
  return (eps * eps / (s + 2.0 * x) + eps) / (s + eps);
}

}  // namespace

double shrink_f(double x, double eps) {
  if (x <= 0.0) return 0.0;
  if (eps <= 0.0) return 1.0;
  double s = std::hypot(2.0 * x, eps);
  return 2.0 * x / (s + eps);
}

double bias_g(double x, double eps) {
  if (x <= 0.0 || eps <= 0.0) return 0.0;
  double s = std::hypot(2.0 * x, eps);
  // 1 - f^2 = 2 eps / (s + eps), so the log term never sees cancellation.
  return 2.0 * x * shrink_complement(x, eps) + eps * std::log((s + eps) / (2.0 * eps));
}

double pert_delta(double x, double eps) {
  if (x <= 0.0) return 0.0;
  if (eps <= 0.0) return 0.0;
  double c = shrink_complement(x, eps);
  // 2 - sqrt(2 (1 + f)) rewritten through the complement of f.
  return c / (1.0 + std::sqrt(1.0 - 0.5 * c));
}

double eta(double x, double eps) {
  if (x <= 0.0 || eps <= 0.0) return 0.0;
  return shrink_complement(x, eps);
}

double psi(double u) {
  if (u <= 0.0) return 0.0;
  double t = std::hypot(1.0, u);
  // Complement of w = sqrt(1 + u^2) - u, written without subtraction.
  double c = (u / (t + u)) * (u / (t + 1.0) + 1.0);
  return c / (2.0 * u * (1.0 + std::sqrt(1.0 - 0.5 * c)));
}

double indicator_f0(double x) { return x > 0.0 ? 1.0 : 0.0; }

double eval_scalar(ScalarFn fn, double x, double eps) {
  switch (fn) {
    case ScalarFn::shrink_f:
      return shrink_f(x, eps);
    case ScalarFn::bias_g:
      return bias_g(x, eps);
    case ScalarFn::pert_delta:
      return pert_delta(x, eps);
    case ScalarFn::eta:
      return eta(x, eps);
    case ScalarFn::psi:
      return psi(x);
    case ScalarFn::indicator_f0:
      return indicator_f0(x);
  }
  return 0.0;
}

int numerical_rank(const Vector& eigenvalues_desc, double tol, double scale) {
  double anchor = scale > 0.0 ? scale : std::max(eigenvalues_desc.size() > 0 ? eigenvalues_desc[0] : 0.0, 0.0);
  double thresh = tol * anchor;
  int r = 0;
  for (Eigen::Index j = 0; j < eigenvalues_desc.size(); ++j) {
    if (eigenvalues_desc[j] > thresh) ++r;
  }
  return r;
}

SymmetricSpectrum eigh(const Matrix& S, double rank_tolerance) {
  if (S.rows() != S.cols()) {
    throw NonSymmetric("eigh: matrix is not square");
  }
  if (S.size() == 0) {
    SymmetricSpectrum empty;
    empty.rank_tolerance = rank_tolerance;
    empty.eigenvalues = Vector(0);
    empty.eigenvectors = Matrix(0, 0);
    empty.numerical_rank = 0;
    return empty;
  }
  double scale = S.cwiseAbs().maxCoeff();
  double asym = (S - S.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-8 * scale) {
    std::ostringstream msg;
    msg << "eigh: asymmetry " << asym << " exceeds 1e-8 * " << scale;
    throw NonSymmetric(msg.str());
  }
  Matrix sym = 0.5 * (S + S.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw EigenFailure("eigh: eigendecomposition did not converge");
  }

  SymmetricSpectrum spec;
  spec.rank_tolerance = rank_tolerance;
  spec.eigenvalues = solver.eigenvalues().reverse();
  spec.eigenvectors = solver.eigenvectors().rowwise().reverse();
  spec.numerical_rank = numerical_rank(spec.eigenvalues, rank_tolerance, -1.0);
  return spec;
}

Matrix apply_fn(const SymmetricSpectrum& spec, ScalarFn fn, double eps) {
  Vector w(spec.eigenvalues.size());
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    w[j] = eval_scalar(fn, std::max(spec.eigenvalues[j], 0.0), eps);
  }
  return spec.eigenvectors * w.asDiagonal() * spec.eigenvectors.transpose();
}

Matrix apply_fn(const SymmetricSpectrum& spec,
                const std::function<double(double)>& fn) {
  Vector w(spec.eigenvalues.size());
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    w[j] = fn(std::max(spec.eigenvalues[j], 0.0));
  }
  return spec.eigenvectors * w.asDiagonal() * spec.eigenvectors.transpose();
}

namespace {

// Shared core for the rank-truncated spectral transforms.
Matrix truncated_transform(const Matrix& S, double tol, double scale,
                           double (*op)(double), const char* name) {
  SymmetricSpectrum spec = eigh(S, tol);
  double anchor = scale > 0.0 ? scale : std::max(spec.eigenvalues.size() > 0 ? spec.eigenvalues[0] : 0.0, 0.0);
  double thresh = tol * anchor;
  Vector w = Vector::Zero(spec.eigenvalues.size());
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    double lam = spec.eigenvalues[j];
    if (lam < -thresh) {
      std::ostringstream msg;
      msg << name << ": eigenvalue " << lam << " below -" << thresh;
      throw NegativeEigenvalue(msg.str());
    }
    if (lam > thresh) w[j] = op(lam);
  }
  return spec.eigenvectors * w.asDiagonal() * spec.eigenvectors.transpose();
}

double op_sqrt(double x) { return std::sqrt(x); }
double op_inv(double x) { return 1.0 / x; }
double op_inv_sqrt(double x) { return 1.0 / std::sqrt(x); }

}  // namespace

Matrix psd_sqrt(const Matrix& S, double tol, double scale) {
  return truncated_transform(S, tol, scale, op_sqrt, "psd_sqrt");
}

Matrix pinv(const Matrix& S, double tol, double scale) {
  return truncated_transform(S, tol, scale, op_inv, "pinv");
}

Matrix pinv_sqrt(const Matrix& S, double tol, double scale) {
  return truncated_transform(S, tol, scale, op_inv_sqrt, "pinv_sqrt");
}

Matrix pivoted_cholesky(const Matrix& S, double tol, double scale) {
  if (S.rows() != S.cols()) {
    throw NotPSD("pivoted_cholesky: matrix is not square");
  }
  Eigen::Index d = S.rows();
  Matrix W = 0.5 * (S + S.transpose());
  Matrix L = Matrix::Zero(d, d);
  std::vector<Eigen::Index> perm(d);
  std::iota(perm.begin(), perm.end(), 0);

  double anchor = scale;
  if (anchor <= 0.0) {
    anchor = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) anchor = std::max(anchor, W(i, i));
  }
  double thresh = tol * anchor;

  Eigen::Index rank = 0;
  for (Eigen::Index k = 0; k < d; ++k) {
    Eigen::Index best = k;
    for (Eigen::Index j = k + 1; j < d; ++j) {
      if (W(perm[j], perm[j]) > W(perm[best], perm[best])) best = j;
    }
    std::swap(perm[k], perm[best]);
    Eigen::Index p = perm[k];
    double piv = W(p, p);
    if (piv < -thresh) {
      std::ostringstream msg;
      msg << "pivoted_cholesky: pivot " << piv << " below -" << thresh;
      throw NotPSD(msg.str());
    }
    if (piv <= thresh) break;

    double lkk = std::sqrt(piv);
    L(p, k) = lkk;
    for (Eigen::Index j = k + 1; j < d; ++j) {
      Eigen::Index r = perm[j];
      L(r, k) = W(r, p) / lkk;
    }
    for (Eigen::Index j = k + 1; j < d; ++j) {
      Eigen::Index r = perm[j];
      for (Eigen::Index t = k + 1; t < d; ++t) {
        Eigen::Index c = perm[t];
        W(r, c) -= L(r, k) * L(c, k);
      }
    }
    rank = k + 1;
  }

  // Anything left on the diagonal is supposed to be rounding noise.
  for (Eigen::Index j = rank; j < d; ++j) {
    double rem = W(perm[j], perm[j]);
    if (rem < -thresh) {
      std::ostringstream msg;
      msg << "pivoted_cholesky: residual diagonal " << rem << " below -" << thresh;
      throw NotPSD(msg.str());
    }
  }
  return L;
}

}  // namespace gsot
