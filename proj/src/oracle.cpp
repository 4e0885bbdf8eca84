#include "gsot/oracle.hpp"

#include <cmath>
#include <limits>

namespace gsot {

namespace {

double scalar_profit(double s, double lambda, double eps) {
  return 2.0 * lambda * s + eps * std::log1p(-s * s);
}

constexpr double kBallEdge = 1.0 - 1e-12;
constexpr double kClipEdge = 1.0 - 1e-8;

}  // namespace

double scalar_argmax(double lambda, double eps, const OracleConfig& config) {
  if (eps <= 0.0) {
    throw InvalidEpsilon("scalar_argmax: eps must be positive");
  }
  if (lambda <= 0.0) return 0.0;

  double lo = 0.0;
  double hi = kBallEdge;
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - invphi * (hi - lo);
  double x2 = lo + invphi * (hi - lo);
  double p1 = scalar_profit(x1, lambda, eps);
  double p2 = scalar_profit(x2, lambda, eps);
  int iters = std::min(config.max_iterations, 200);
  for (int k = 0; k < iters && hi - lo > 1e-14; ++k) {
    if (p1 < p2) {
      lo = x1;
      x1 = x2;
      p1 = p2;
      x2 = lo + invphi * (hi - lo);
      p2 = scalar_profit(x2, lambda, eps);
    } else {
      hi = x2;
      x2 = x1;
      p2 = p1;
      x1 = hi - invphi * (hi - lo);
      p1 = scalar_profit(x1, lambda, eps);
    }
  }
  double s = 0.5 * (lo + hi);

  // Golden section alone stalls on the flat top; a few Newton steps on
  // the derivative pin the stationary point to full precision.
  for (int k = 0; k < 5; ++k) {
    double om = 1.0 - s * s;
    double d1 = 2.0 * lambda - 2.0 * eps * s / om;
    double d2 = -2.0 * eps * (1.0 + s * s) / (om * om);
    double next = s - d1 / d2;
    if (!(next > 0.0)) next = 0.5 * s;
    if (next > kBallEdge) next = kBallEdge;
    s = next;
  }
  return s;
}

double profit_value(const Matrix& R, const Matrix& G, const Matrix& M,
                    double eps) {
  double linear = 2.0 * (R * (M.transpose() * G)).trace();
  Eigen::BDCSVD<Matrix> svd(R);
  double barrier = 0.0;
  for (Eigen::Index j = 0; j < svd.singularValues().size(); ++j) {
    double sv = svd.singularValues()[j];
    if (sv >= 1.0) return -std::numeric_limits<double>::infinity();
    barrier += std::log1p(-sv * sv);
  }
  return linear + eps * barrier;
}

Matrix profit_gradient(const Matrix& R, const Matrix& G, const Matrix& M,
                       double eps) {
  Matrix gram = Matrix::Identity(R.cols(), R.cols()) - R.transpose() * R;
  return 2.0 * G.transpose() * M - 2.0 * eps * R * gram.inverse();
}

namespace {

Matrix clip_to_ball(const Matrix& R) {
  Eigen::BDCSVD<Matrix> svd(R, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Vector sv = svd.singularValues();
  bool inside = true;
  for (Eigen::Index j = 0; j < sv.size(); ++j) {
    if (sv[j] > kClipEdge) {
      sv[j] = kClipEdge;
      inside = false;
    }
  }
  if (inside) return R;
  return svd.matrixU() * sv.asDiagonal() * svd.matrixV().transpose();
}

}  // namespace

ProfitMaxResult profit_maximizer(const Matrix& G, const Matrix& M, double eps,
                                 const OracleConfig& config) {
  if (eps <= 0.0) {
    throw InvalidEpsilon("profit_maximizer: eps must be positive");
  }
  ProfitMaxResult out;
  Eigen::Index q = G.cols();
  Eigen::Index r = M.cols();
  Matrix R = Matrix::Zero(q, r);
  double value = profit_value(R, G, M, eps);
  Matrix grad = profit_gradient(R, G, M, eps);
  double grad_scale = std::max(1.0, (G.transpose() * M).norm());
  double step = config.step_size;

  int k = 0;
  for (; k < config.max_iterations; ++k) {
    out.grad_norm = grad.norm();
    if (out.grad_norm <= config.tolerance * grad_scale) {
      out.converged = true;
      break;
    }
    double g2 = grad.squaredNorm();
    Matrix R_next;
    double value_next = -std::numeric_limits<double>::infinity();
    double t = step;
    for (int back = 0; back < 60; ++back) {
      R_next = clip_to_ball(R + t * grad);
      value_next = profit_value(R_next, G, M, eps);
      if (value_next >= value + 1e-4 * t * g2) break;
      t *= 0.5;
    }
    if (!(value_next > -std::numeric_limits<double>::infinity()) ||
        value_next < value - 1e-12 * std::abs(value)) {
      break;  // line search exhausted, gradient step no longer helps
    }
    Matrix grad_next = profit_gradient(R_next, G, M, eps);

    // Barzilai-Borwein step for the next round, guarded to stay sane.
    Matrix dR = R_next - R;
    Matrix dg = grad_next - grad;
    double denom = -(dR.cwiseProduct(dg)).sum();
    double numer = dR.squaredNorm();
    if (denom > 0.0 && numer > 0.0) {
      step = std::min(numer / denom, 1e6);
    } else {
      step = std::max(t * 2.0, 1e-12);
    }
    R = R_next;
    value = value_next;
    grad = grad_next;
  }
  out.R = R;
  out.value = value;
  out.iterations = k;
  return out;
}

double kl_bruteforce(const Matrix& sigma, const Matrix& A, const Matrix& B,
                     double tol) {
  Eigen::Index d1 = A.rows();
  Eigen::Index d2 = B.rows();
  Matrix indep = Matrix::Zero(d1 + d2, d1 + d2);
  indep.topLeftCorner(d1, d1) = A;
  indep.bottomRightCorner(d2, d2) = B;

  double scale = std::max(indep.cwiseAbs().maxCoeff(), 1e-300);
  Matrix W = pinv_sqrt(indep, tol);
  Matrix T = W * (sigma - indep) * W;

  // Mass of sigma outside the support of the product measure makes the
  // divergence infinite.
  SymmetricSpectrum ispec = eigh(indep, tol);
  Matrix V = ispec.eigenvectors;
  for (Eigen::Index j = 0; j < ispec.eigenvalues.size(); ++j) {
    if (ispec.eigenvalues[j] > tol * std::max(ispec.eigenvalues[0], 0.0)) continue;
    double leak = (V.col(j).transpose() * sigma * V.col(j)).value();
    if (std::abs(leak) > tol * scale) {
      throw SingularRegime("kl_bruteforce: coupling charges the null space of the product measure");
    }
  }

  SymmetricSpectrum tspec = eigh(T, tol);
  double kl = 0.0;
  for (Eigen::Index j = 0; j < tspec.eigenvalues.size(); ++j) {
    double t = tspec.eigenvalues[j];
    if (1.0 + t <= tol) {
      throw SingularRegime("kl_bruteforce: whitened covariance is singular");
    }
    kl += 0.5 * (t - std::log1p(t));
  }
  return kl;
}

double w2_direct(const Matrix& S1, const Matrix& S2) {
  Matrix root = psd_sqrt(S1);
  Matrix inner = root * S2 * root;
  Matrix cross = psd_sqrt(0.5 * (inner + inner.transpose()));
  double w2 = S1.trace() + S2.trace() - 2.0 * cross.trace();
  return std::max(w2, 0.0);
}

}  // namespace gsot
