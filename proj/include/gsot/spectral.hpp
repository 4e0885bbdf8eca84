// Symmetric eigendecomposition with a shared rank convention, spectral
// matrix functions, and the scalar shrinkage family that drives the
// entropic transport solver: f (shrinkage), g (entropic bias), delta
// (coupling perturbation), eta (residual weight), psi (normalized
// perturbation profile). All scalar kinds evaluate to exactly 0 at 0.
#pragma once

#include <Eigen/Dense>

#include <functional>

#include "gsot/errors.hpp"

namespace gsot {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Relative cutoff separating genuine eigenvalues from rounding noise.
inline constexpr double kDefaultRankTol = 1e-10;

struct SymmetricSpectrum {
  Vector eigenvalues;   // descending
  Matrix eigenvectors;  // column j pairs with eigenvalues[j]
  double rank_tolerance = kDefaultRankTol;
  int numerical_rank = 0;
};

// Decompose a symmetric matrix. Throws NonSymmetric if the asymmetry
// exceeds 1e-8 times the largest entry; otherwise works on (S + S^T)/2.
SymmetricSpectrum eigh(const Matrix& S, double rank_tolerance = kDefaultRankTol);

enum class ScalarFn { shrink_f, bias_g, pert_delta, eta, psi, indicator_f0 };

double shrink_f(double x, double eps);
double bias_g(double x, double eps);
double pert_delta(double x, double eps);
double eta(double x, double eps);
double psi(double u);
double indicator_f0(double x);

double eval_scalar(ScalarFn fn, double x, double eps);

// Spectral calculus: V fn(Lambda) V^T with negative eigenvalues clipped
// to zero before evaluation. Never throws for finite input.
Matrix apply_fn(const SymmetricSpectrum& spec, ScalarFn fn, double eps);
Matrix apply_fn(const SymmetricSpectrum& spec,
                const std::function<double(double)>& fn);

// Rank-truncated square root, pseudoinverse, and inverse square root.
// Eigenvalues at or below tol * anchor are treated as zero, where anchor
// is the top eigenvalue unless a positive external scale is given.
// Eigenvalues below -tol * anchor raise NegativeEigenvalue.
Matrix psd_sqrt(const Matrix& S, double tol = kDefaultRankTol,
                double scale = -1.0);
Matrix pinv(const Matrix& S, double tol = kDefaultRankTol,
            double scale = -1.0);
Matrix pinv_sqrt(const Matrix& S, double tol = kDefaultRankTol,
                 double scale = -1.0);

// Diagonally pivoted Cholesky. Returns a d x d factor L with L L^T = S,
// columns beyond the numerical rank identically zero. A pivot below
// -tol * anchor raises NotPSD.
Matrix pivoted_cholesky(const Matrix& S, double tol = kDefaultRankTol,
                        double scale = -1.0);

int numerical_rank(const Vector& eigenvalues_desc, double tol, double scale);

}  // namespace gsot
