#include "gsot/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gsot/oracle.hpp"

namespace gsot {

SpectralPath build_path(const AlignedPair& pair) {
  SpectralPath path;
  path.lambda_floor = pair.cross_spectrum.rank_tolerance * pair.cross_scale();
  path.lambdas = pair.cross_spectrum.eigenvalues;
  for (Eigen::Index j = 0; j < path.lambdas.size(); ++j) {
    if (path.lambdas[j] <= path.lambda_floor) path.lambdas[j] = 0.0;
  }
  path.basis = pair.cross_spectrum.eigenvectors;
  path.G = pair.G;
  path.M = pair.M;
  path.canonical = pair.canonical;
  path.trace_a = pair.G.parent->trace();
  path.trace_b = pair.M.parent->trace();
  if (pair.canonical) {
    path.GtG = pair.G.parent->matrix();
    path.MtM = pair.M.G.transpose() * pair.M.G;
    path.GtG_sq = path.GtG * path.GtG;
    path.MtM_sq = path.MtM * path.MtM;
  }
  return path;
}

SpectralPath path_from_spectrum(const Vector& lambdas, double trace_a,
                                double trace_b) {
  SpectralPath path;
  path.lambdas = lambdas.cwiseMax(0.0);
  std::sort(path.lambdas.data(), path.lambdas.data() + path.lambdas.size(),
            std::greater<double>());
  path.trace_a = trace_a;
  path.trace_b = trace_b;
  path.diagonal = true;
  path.canonical = true;
  return path;
}

double kl_divergence(const SpectralPath& path, double eps) {
  if (eps <= 0.0) {
    throw SingularCoupling(
        "kl_divergence: the unregularized limit plan has infinite "
        "divergence from the product measure");
  }
  double kl = 0.0;
  for (Eigen::Index j = 0; j < path.lambdas.size(); ++j) {
    double lam = path.lambdas[j];
    if (lam <= 0.0) continue;
    double s = shrink_f(lam, eps);
    // 1 - s^2 = eps s / lambda exactly at the stationary point, so the
    // per-mode entropy -log(1 - s^2)/2 never suffers cancellation.
    kl += 0.5 * std::log(lam / (eps * s));
  }
  return kl;
}

EotReport solve_at(const SpectralPath& path, double eps) {
  if (eps <= 0.0) {
    throw InvalidEpsilon(
        "solve_at: eps must be positive; the eps -> 0 limit is exposed by "
        "limit_coupling and coupling_distance_sq");
  }
  EotReport report;
  report.epsilon = eps;
  report.shrunk = Vector::Zero(path.lambdas.size());
  double cross_sum = 0.0;
  double kl = 0.0;
  for (Eigen::Index j = 0; j < path.lambdas.size(); ++j) {
    double lam = path.lambdas[j];
    if (lam <= 0.0) continue;
    double s = shrink_f(lam, eps);
    report.shrunk[j] = s;
    cross_sum += lam * s;
    kl += 0.5 * std::log(lam / (eps * s));
  }
  report.transport_cost = path.trace_a + path.trace_b - 2.0 * cross_sum;
  report.kl = kl;
  report.entropic_cost = report.transport_cost + 2.0 * eps * kl;
  report.r_trace_norm = report.shrunk.sum();
  return report;
}

std::vector<EotReport> entropic_cost_curve(
    const SpectralPath& path, const std::vector<double>& eps_grid) {
  std::vector<EotReport> out;
  out.reserve(eps_grid.size());
  for (double eps : eps_grid) {
    out.push_back(solve_at(path, eps));
  }
  return out;
}

namespace {

Matrix shrink_matrix(const SpectralPath& path, double eps) {
  Vector s(path.lambdas.size());
  for (Eigen::Index j = 0; j < s.size(); ++j) {
    double lam = path.lambdas[j];
    s[j] = eps > 0.0 ? shrink_f(lam, eps) : indicator_f0(lam);
  }
  return path.basis * s.asDiagonal() * path.basis.transpose();
}

}  // namespace

Coupling materialize(const SpectralPath& path, double eps) {
  if (path.diagonal) {
    throw config_error("materialize: spectrum-only path carries no factors");
  }
  if (eps < 0.0) {
    throw InvalidEpsilon("materialize: eps must be nonnegative");
  }
  Matrix R = shrink_matrix(path, eps);
  Eigen::Index q = path.G.G.cols();
  Matrix C = path.G.G * R * path.M.G.leftCols(q).transpose();
  Eigen::Index d = path.G.parent->dim();

  Coupling coupling;
  coupling.d = d;
  coupling.sigma = Matrix::Zero(2 * d, 2 * d);
  coupling.sigma.topLeftCorner(d, d) = path.G.parent->matrix();
  coupling.sigma.bottomRightCorner(d, d) = path.M.parent->matrix();
  coupling.sigma.topRightCorner(d, d) = C;
  coupling.sigma.bottomLeftCorner(d, d) = C.transpose();
  coupling.validate();
  return coupling;
}

Coupling limit_coupling(CovariancePtr A, CovariancePtr B) {
  AlignedPair pair = canonical_pair(A, B);
  SpectralPath path = build_path(pair);
  return materialize(path, 0.0);
}

double coupling_distance_sq(const SpectralPath& path, double eps) {
  if (eps < 0.0) {
    throw InvalidEpsilon("coupling_distance_sq: eps must be nonnegative");
  }
  if (eps == 0.0) return 0.0;
  if (path.diagonal) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < path.lambdas.size(); ++j) {
      sum += path.lambdas[j] * pert_delta(path.lambdas[j], eps);
    }
    return 2.0 * sum;
  }
  if (!path.canonical) {
    throw config_error(
        "coupling_distance_sq: needs a canonical pair; rebuild the path "
        "from canonical_pair(A, B)");
  }
  Matrix R = shrink_matrix(path, eps);
  Matrix Q = path.GtG_sq + path.MtM_sq + path.GtG * R * path.MtM +
             path.MtM * R * path.GtG;
  Q = 0.5 * (Q + Q.transpose()).eval();
  SymmetricSpectrum spec = eigh(Q);
  double top = std::max(spec.eigenvalues[0], 0.0);
  double bottom = spec.eigenvalues[spec.eigenvalues.size() - 1];
  if (bottom < -1e-8 * top) {
    std::ostringstream msg;
    msg << "coupling_distance_sq: fourth-moment matrix has eigenvalue "
        << bottom << " at scale " << top;
    throw IndefiniteQ(msg.str());
  }
  double root_sum = 0.0;
  for (Eigen::Index j = 0; j < spec.eigenvalues.size(); ++j) {
    root_sum += std::sqrt(std::max(spec.eigenvalues[j], 0.0));
  }
  return 2.0 * (path.trace_a + path.trace_b - root_sum);
}

UpperBounds upper_bounds(const SpectralPath& path, double eps) {
  UpperBounds bounds;
  if (eps <= 0.0) return bounds;
  const double jump = 2.0 - std::sqrt(2.0);

  if (path.diagonal) {
    double b1 = 0.0;
    double sum_eta = 0.0;
    for (Eigen::Index j = 0; j < path.lambdas.size(); ++j) {
      double lam = path.lambdas[j];
      b1 += 2.0 * lam * (lam > 0.0 ? pert_delta(lam, eps) : jump);
      sum_eta += lam * eta(lam, eps);
    }
    bounds.bound1 = b1;
    bounds.bound2 = 2.0 * sum_eta;
    return bounds;
  }
  if (!path.canonical) {
    throw config_error(
        "upper_bounds: needs a canonical pair; rebuild the path from "
        "canonical_pair(A, B)");
  }
  double b1 = 0.0;
  double eta_a = 0.0;
  double eta_b = 0.0;
  for (Eigen::Index j = 0; j < path.lambdas.size(); ++j) {
    double lam = path.lambdas[j];
    Vector e = path.basis.col(j);
    double aj = e.dot(path.GtG * e);
    double mj = e.dot(path.MtM * e);
    b1 += (aj + mj) * (lam > 0.0 ? pert_delta(lam, eps) : jump);
    double w = eta(lam, eps);
    eta_a += aj * w;
    eta_b += mj * w;
  }
  bounds.bound1 = b1;
  bounds.bound2 = 2.0 * std::min(eta_a, eta_b);
  return bounds;
}

CorrelationCheck validate_correlation(const Matrix& R, const AlignedPair& pair) {
  CorrelationCheck check;
  Eigen::Index q = pair.G.G.cols();
  Eigen::Index w = pair.M.G.cols();
  Matrix R_full = Matrix::Zero(q, w);
  if (R.rows() != q || R.cols() > w) {
    check.failure = "shape";
    return check;
  }
  R_full.leftCols(R.cols()) = R;

  Eigen::BDCSVD<Matrix> rsvd(R_full);
  check.spectral_norm =
      rsvd.singularValues().size() > 0 ? rsvd.singularValues()[0] : 0.0;

  // Projector onto the null space of M from its right singular vectors.
  Eigen::BDCSVD<Matrix> msvd(pair.M.G, Eigen::ComputeFullV);
  const Vector& msv = msvd.singularValues();
  double mtop = msv.size() > 0 ? msv[0] : 0.0;
  Eigen::Index mrank = 0;
  for (Eigen::Index j = 0; j < msv.size(); ++j) {
    if (msv[j] > kDefaultRankTol * mtop) ++mrank;
  }
  Matrix null_proj = Matrix::Identity(w, w) -
                     msvd.matrixV().leftCols(mrank) *
                         msvd.matrixV().leftCols(mrank).transpose();
  check.null_residual = (R_full * null_proj).cwiseAbs().maxCoeff();

  // Projector onto the row space of G.
  Eigen::BDCSVD<Matrix> gsvd(pair.G.G, Eigen::ComputeFullV);
  const Vector& gsv = gsvd.singularValues();
  double gtop = gsv.size() > 0 ? gsv[0] : 0.0;
  Eigen::Index grank = 0;
  for (Eigen::Index j = 0; j < gsv.size(); ++j) {
    if (gsv[j] > kDefaultRankTol * gtop) ++grank;
  }
  Matrix row_proj = gsvd.matrixV().leftCols(grank) *
                    gsvd.matrixV().leftCols(grank).transpose();
  check.range_residual =
      ((Matrix::Identity(q, q) - row_proj) * R_full).cwiseAbs().maxCoeff();

  double tol = 1e-8 * std::max(1.0, check.spectral_norm);
  if (check.spectral_norm >= 1.0 - 1e-12) {
    check.failure = "spectral_norm";
  } else if (check.null_residual > tol) {
    check.failure = "null_space";
  } else if (check.range_residual > tol) {
    check.failure = "range";
  } else {
    check.ok = true;
  }
  return check;
}

double profit(const Matrix& R, const AlignedPair& pair, double eps) {
  Eigen::Index q = pair.G.G.cols();
  Eigen::Index w = pair.M.G.cols();
  Matrix R_full = Matrix::Zero(q, w);
  R_full.leftCols(R.cols()) = R;
  return profit_value(R_full, pair.G.G, pair.M.G, eps);
}

}  // namespace gsot
