#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "gsot/oracle.hpp"
#include "gsot/random.hpp"
#include "gsot/solver.hpp"

using namespace gsot;

namespace {

CovariancePtr random_cov(Eigen::Index d, std::mt19937_64& rng,
                         double ridge = 0.0) {
  Matrix G = standard_gaussian(d, d, rng);
  Matrix S = G * G.transpose() / static_cast<double>(d);
  S += ridge * Matrix::Identity(d, d);
  return covariance(S);
}

CovariancePtr diag_cov(const std::vector<double>& entries) {
  Matrix S = Matrix::Zero(entries.size(), entries.size());
  for (size_t i = 0; i < entries.size(); ++i) S(i, i) = entries[i];
  return covariance(S);
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) {
    out[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
  }
  return out;
}

Matrix shrink_core(const SpectralPath& path, const EotReport& report) {
  return path.basis * report.shrunk.asDiagonal() * path.basis.transpose();
}

}  // namespace

TEST_CASE("solve_at: one-dimensional closed form") {
  CovariancePtr unit = diag_cov({1.0});
  SpectralPath path = build_path(canonical_pair(unit, unit));
  EotReport report = solve_at(path, 1.0);
  CHECK(report.shrunk[0] ==
        doctest::Approx(0.61803398874989485).epsilon(1e-14));
  CHECK(report.transport_cost ==
        doctest::Approx(0.7639320225002103).epsilon(1e-14));
  CHECK(report.kl == doctest::Approx(0.24060591252980172).epsilon(1e-13));
  CHECK(report.entropic_cost ==
        doctest::Approx(1.2451438475598138).epsilon(1e-14));
  CHECK(report.r_trace_norm ==
        doctest::Approx(0.61803398874989485).epsilon(1e-14));
}

TEST_CASE("solve_at: cost decomposition identities") {
  std::mt19937_64 rng(101);
  CovariancePtr A = random_cov(5, rng, 0.02);
  CovariancePtr B = random_cov(5, rng, 0.02);
  SpectralPath path = build_path(canonical_pair(A, B));

  for (double eps : {1e-4, 0.05, 1.0, 50.0}) {
    EotReport report = solve_at(path, eps);

    // entropic = transport + 2 eps KL by construction, and equals the
    // unregularized cost plus the per-mode bias sum.
    CHECK(report.entropic_cost ==
          doctest::Approx(report.transport_cost + 2.0 * eps * report.kl)
              .epsilon(1e-13));
    double bias = 0.0;
    for (Eigen::Index j = 0; j < path.lambdas.size(); ++j) {
      bias += bias_g(path.lambdas[j], eps);
    }
    CHECK(report.entropic_cost ==
          doctest::Approx(path.w2_squared() + bias).epsilon(1e-12));
    CHECK(report.entropic_cost > path.w2_squared());

    // Nuclear norm of the correlation never exceeds the mode count or
    // the trace bound.
    CHECK(report.r_trace_norm <=
          static_cast<double>(path.modes()) + 1e-12);
    CHECK(report.r_trace_norm <=
          2.0 * path.lambdas.sum() / eps + 1e-12);
  }

  // Vanishing regularization recovers the transport cost.
  EotReport tight = solve_at(path, 1e-10);
  CHECK(tight.entropic_cost - path.w2_squared() > 0.0);
  CHECK(tight.entropic_cost - path.w2_squared() < 1e-7);
}

TEST_CASE("solve_at: monotonicity along a grid") {
  std::mt19937_64 rng(103);
  CovariancePtr A = random_cov(4, rng, 0.05);
  CovariancePtr B = random_cov(4, rng, 0.05);
  SpectralPath path = build_path(canonical_pair(A, B));

  std::vector<EotReport> curve = entropic_cost_curve(path, log_grid(1e-3, 10.0, 25));
  for (size_t i = 1; i < curve.size(); ++i) {
    CHECK(curve[i].entropic_cost > curve[i - 1].entropic_cost);
    CHECK(curve[i].transport_cost > curve[i - 1].transport_cost);
    CHECK(curve[i].kl < curve[i - 1].kl);
    CHECK(curve[i].r_trace_norm < curve[i - 1].r_trace_norm);
  }
}

TEST_CASE("materialize: exact marginals, valid joint, entropy cross-check") {
  std::mt19937_64 rng(107);
  CovariancePtr A = random_cov(4, rng, 0.05);
  CovariancePtr B = random_cov(4, rng, 0.05);
  SpectralPath path = build_path(canonical_pair(A, B));
  double eps = 0.25;
  EotReport report = solve_at(path, eps);
  Coupling coupling = materialize(path, eps);

  CHECK(coupling.validated);
  CHECK((coupling.A_block().array() == A->matrix().array()).all());
  CHECK((coupling.B_block().array() == B->matrix().array()).all());
  CHECK(coupling.transport_cost() ==
        doctest::Approx(report.transport_cost).epsilon(1e-9));

  // The brute-force relative entropy of the materialized joint agrees
  // with the per-mode closed form.
  double kl_ref = kl_bruteforce(coupling.sigma, A->matrix(), B->matrix());
  CHECK(report.kl == doctest::Approx(kl_ref).epsilon(1e-8));
}

TEST_CASE("materialize: appended-column factors still close") {
  std::mt19937_64 rng(109);
  CovariancePtr A = random_cov(3, rng, 0.1);
  Matrix Gb = standard_gaussian(3, 2, rng);
  CovariancePtr B = covariance(Matrix(Gb * Gb.transpose() / 3.0));

  AlignedPair pair = align(green_factor(A, FactorMethod::symmetric_sqrt),
                           green_factor(B, FactorMethod::pivoted_cholesky));
  SpectralPath path = build_path(pair);
  Coupling coupling = materialize(path, 0.5);
  CHECK(coupling.validated);
  CHECK((coupling.A_block().array() == A->matrix().array()).all());
  CHECK((coupling.B_block().array() == B->matrix().array()).all());
}

TEST_CASE("factor-choice invariance of reports, spectra, couplings") {
  std::mt19937_64 rng(113);
  CovariancePtr A = random_cov(4, rng, 0.02);
  CovariancePtr B = random_cov(4, rng, 0.02);
  double eps = 0.3;

  SpectralPath reference = build_path(canonical_pair(A, B));
  EotReport ref_report = solve_at(reference, eps);
  Coupling ref_coupling = materialize(reference, eps);
  double scale = std::max(A->top_eigenvalue(), B->top_eigenvalue());

  for (FactorMethod gm : {FactorMethod::symmetric_sqrt,
                          FactorMethod::pivoted_cholesky,
                          FactorMethod::eigen_scaled}) {
    for (FactorMethod mm : {FactorMethod::symmetric_sqrt,
                            FactorMethod::eigen_scaled}) {
      AlignedPair pair = align(green_factor(A, gm, 5), green_factor(B, mm, 9));
      SpectralPath path = build_path(pair);
      CHECK((path.lambdas - reference.lambdas).cwiseAbs().maxCoeff() <
            1e-7 * reference.lambdas[0]);

      EotReport report = solve_at(path, eps);
      CHECK(report.entropic_cost ==
            doctest::Approx(ref_report.entropic_cost).epsilon(1e-7));
      CHECK(report.transport_cost ==
            doctest::Approx(ref_report.transport_cost).epsilon(1e-7));
      CHECK(report.kl == doctest::Approx(ref_report.kl).epsilon(1e-7));

      Coupling coupling = materialize(path, eps);
      CHECK((coupling.sigma - ref_coupling.sigma).cwiseAbs().maxCoeff() <
            1e-7 * scale);
    }
  }
}

TEST_CASE("profit: the shrunk correlation attains the dual value") {
  std::mt19937_64 rng(127);
  CovariancePtr A = random_cov(3, rng, 0.05);
  CovariancePtr B = random_cov(3, rng, 0.05);
  AlignedPair pair = canonical_pair(A, B);
  SpectralPath path = build_path(pair);
  double eps = 0.5;
  EotReport report = solve_at(path, eps);
  Matrix R = shrink_core(path, report);

  double dual = 0.0;
  for (Eigen::Index j = 0; j < path.lambdas.size(); ++j) {
    dual += 2.0 * path.lambdas[j] - bias_g(path.lambdas[j], eps);
  }
  CHECK(profit(R, pair, eps) == doctest::Approx(dual).epsilon(1e-9));

  // Any perturbation inside the ball only loses profit.
  Matrix bent = 0.97 * R;
  bent(0, 1) += 0.02;
  bent(1, 0) -= 0.015;
  CHECK(profit(bent, pair, eps) < dual);

  // The iterative maximizer lands on the same value.
  ProfitMaxResult opt = profit_maximizer(pair.G.G, pair.M.G, eps);
  CHECK(opt.converged);
  CHECK(opt.value == doctest::Approx(dual).epsilon(1e-7));

  CorrelationCheck check = validate_correlation(R, pair);
  CHECK(check.ok);
  CHECK(check.spectral_norm == doctest::Approx(report.shrunk[0]).epsilon(1e-12));
}

TEST_CASE("validate_correlation: failure taxonomy") {
  CovariancePtr I2 = diag_cov({1.0, 1.0});
  CovariancePtr low = diag_cov({1.0, 0.0});

  AlignedPair pair = canonical_pair(I2, I2);
  Matrix big = 1.5 * Matrix::Identity(2, 2);
  CHECK(validate_correlation(big, pair).failure == "spectral_norm");

  // Mass on the null space of the target factor.
  AlignedPair null_pair = canonical_pair(I2, low);
  Matrix half = 0.5 * Matrix::Identity(2, 2);
  CHECK(validate_correlation(half, null_pair).failure == "null_space");

  // Mass outside the row space of the source factor.
  AlignedPair range_pair = canonical_pair(low, I2);
  CHECK(validate_correlation(half, range_pair).failure == "range");

  Matrix wrong = Matrix::Zero(3, 2);
  CHECK(validate_correlation(wrong, pair).failure == "shape");
}

TEST_CASE("limit_coupling: matches the block construction") {
  std::mt19937_64 rng(131);
  CovariancePtr A = random_cov(4, rng, 0.05);
  CovariancePtr B = random_cov(4, rng, 0.05);
  double scale = std::max(A->top_eigenvalue(), B->top_eigenvalue());

  Coupling limit = limit_coupling(A, B);
  CHECK(limit.transport_cost() ==
        doctest::Approx(bures_w2_squared(A, B)).epsilon(1e-9));

  Coupling block = kantorovich_coupling(A, B);
  CHECK((limit.sigma - block.sigma).cwiseAbs().maxCoeff() < 1e-8 * scale);

  // The entropic couplings approach the limit plan.
  SpectralPath path = build_path(canonical_pair(A, B));
  Coupling near = materialize(path, 1e-9);
  CHECK((near.sigma - limit.sigma).cwiseAbs().maxCoeff() < 1e-6 * scale);

  // Degenerate source: the limit plan stays optimal.
  CovariancePtr Adef = diag_cov({1.0, 0.5, 0.0, 0.0});
  Coupling deg = limit_coupling(Adef, B);
  CHECK(deg.transport_cost() ==
        doctest::Approx(bures_w2_squared(Adef, B)).epsilon(1e-7));
}

TEST_CASE("coupling_distance_sq: equal marginals are the sharp case") {
  std::mt19937_64 rng(137);
  CovariancePtr A = random_cov(4, rng, 0.05);
  SpectralPath path = build_path(canonical_pair(A, A));

  for (double eps : {1e-3, 0.1, 1.0}) {
    double dist = coupling_distance_sq(path, eps);
    double per_mode = 0.0;
    for (Eigen::Index j = 0; j < path.lambdas.size(); ++j) {
      per_mode += 2.0 * path.lambdas[j] * pert_delta(path.lambdas[j], eps);
    }
    CHECK(dist == doctest::Approx(per_mode).epsilon(1e-9));

    UpperBounds bounds = upper_bounds(path, eps);
    CHECK(dist == doctest::Approx(bounds.bound1).epsilon(1e-9));
    CHECK(dist <= bounds.bound2 * (1.0 + 1e-9));
  }

  // Small-regularization slope: distance/eps approaches rank/2.
  double ratio = coupling_distance_sq(path, 1e-7) / 1e-7;
  CHECK(ratio == doctest::Approx(2.0).epsilon(1e-2));
}

TEST_CASE("coupling_distance_sq: dominated by both bounds in general") {
  std::mt19937_64 rng(139);
  CovariancePtr A = random_cov(4, rng, 0.02);
  CovariancePtr B = random_cov(4, rng, 0.02);
  SpectralPath path = build_path(canonical_pair(A, B));

  for (double eps : log_grid(1e-5, 1.0, 9)) {
    double dist = coupling_distance_sq(path, eps);
    UpperBounds bounds = upper_bounds(path, eps);
    CHECK(dist > 0.0);
    CHECK(dist <= bounds.bound1 * (1.0 + 1e-9));
    CHECK(dist <= bounds.bound2 * (1.0 + 1e-9));
  }
  CHECK(coupling_distance_sq(path, 0.0) == 0.0);

  // Degenerate source: the slope distance/eps stabilizes.
  CovariancePtr Adef = diag_cov({1.0, 0.5, 0.0, 0.0});
  SpectralPath deg = build_path(canonical_pair(Adef, B));
  double r6 = coupling_distance_sq(deg, 1e-6) / 1e-6;
  double r7 = coupling_distance_sq(deg, 1e-7) / 1e-7;
  CHECK(r6 == doctest::Approx(r7).epsilon(5e-2));
}

TEST_CASE("path_from_spectrum: agrees with the matrix path for diagonals") {
  CovariancePtr A = diag_cov({2.0, 1.0, 0.5});
  SpectralPath matrix_path = build_path(canonical_pair(A, A));
  Vector lams(3);
  lams << 0.5, 2.0, 1.0;  // unsorted on purpose
  SpectralPath diag_path = path_from_spectrum(lams, 3.5, 3.5);
  CHECK(diag_path.diagonal);

  double eps = 0.7;
  EotReport from_matrix = solve_at(matrix_path, eps);
  EotReport from_diag = solve_at(diag_path, eps);
  CHECK(from_diag.entropic_cost ==
        doctest::Approx(from_matrix.entropic_cost).epsilon(1e-12));
  CHECK(from_diag.transport_cost ==
        doctest::Approx(from_matrix.transport_cost).epsilon(1e-12));
  CHECK(from_diag.kl == doctest::Approx(from_matrix.kl).epsilon(1e-12));

  CHECK(coupling_distance_sq(diag_path, eps) ==
        doctest::Approx(coupling_distance_sq(matrix_path, eps)).epsilon(1e-9));
  UpperBounds db = upper_bounds(diag_path, eps);
  UpperBounds mb = upper_bounds(matrix_path, eps);
  CHECK(db.bound1 == doctest::Approx(mb.bound1).epsilon(1e-9));
  CHECK(db.bound2 == doctest::Approx(mb.bound2).epsilon(1e-9));
}

TEST_CASE("guard rails on regularization and path kinds") {
  std::mt19937_64 rng(149);
  CovariancePtr A = random_cov(3, rng, 0.05);
  CovariancePtr B = random_cov(3, rng, 0.05);
  SpectralPath path = build_path(canonical_pair(A, B));

  CHECK_THROWS_AS(solve_at(path, 0.0), InvalidEpsilon);
  CHECK_THROWS_AS(solve_at(path, -1.0), InvalidEpsilon);
  CHECK_THROWS_AS(kl_divergence(path, 0.0), SingularCoupling);
  CHECK_THROWS_AS(materialize(path, -0.1), InvalidEpsilon);
  CHECK_THROWS_AS(coupling_distance_sq(path, -1.0), InvalidEpsilon);

  SpectralPath diag = path_from_spectrum(Vector::Ones(2), 2.0, 2.0);
  CHECK_THROWS_AS(materialize(diag, 0.5), config_error);

  AlignedPair skew = align(green_factor(A, FactorMethod::eigen_scaled, 3),
                           green_factor(B, FactorMethod::eigen_scaled, 4));
  SpectralPath skew_path = build_path(skew);
  CHECK_FALSE(skew_path.canonical);
  CHECK_THROWS_AS(coupling_distance_sq(skew_path, 0.5), config_error);
  CHECK_THROWS_AS(upper_bounds(skew_path, 0.5), config_error);
}

TEST_CASE("kl_divergence matches the report") {
  std::mt19937_64 rng(151);
  CovariancePtr A = random_cov(4, rng, 0.05);
  SpectralPath path = build_path(canonical_pair(A, A));
  for (double eps : {1e-4, 0.3, 7.0}) {
    CHECK(kl_divergence(path, eps) ==
          doctest::Approx(solve_at(path, eps).kl).epsilon(1e-13));
  }
}
