#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <memory>
#include <stdexcept>
#include <string>

namespace antiplane {

/// Iterative or direct linear solve that did not reach its target.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double achieved_residual = 0.0)
      : std::runtime_error(what), achieved_residual_(achieved_residual) {}
  [[nodiscard]] double achieved_residual() const { return achieved_residual_; }

 private:
  double achieved_residual_;
};

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Sparse Cholesky factor (CHOLMOD supernodal). Construction never throws on
/// an indefinite matrix; `positive_definite()` reports the outcome, which
/// doubles as an inertia test.
class CholeskyFactor {
 public:
  CholeskyFactor();
  explicit CholeskyFactor(const SparseMatrix& a);
  ~CholeskyFactor();
  CholeskyFactor(CholeskyFactor&&) noexcept;
  CholeskyFactor& operator=(CholeskyFactor&&) noexcept;

  /// Reuses the symbolic analysis when the pattern is unchanged.
  bool factorize(const SparseMatrix& a);
  [[nodiscard]] bool positive_definite() const { return ok_; }
  [[nodiscard]] Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  [[nodiscard]] Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  bool ok_ = false;
};

struct CgResult {
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Preconditioned conjugate gradients (incomplete Cholesky) for SPD `a`;
/// throws SolverError when the relative residual stays above `tol`.
CgResult conjugate_gradient(const SparseMatrix& a, const Eigen::VectorXd& b, Eigen::VectorXd& x, double tol,
                            int max_iterations);

/// Least-squares fit of log(y) = slope * log(x) + log(prefactor).
struct PowerLawFit {
  double slope = 0.0;
  double prefactor = 0.0;
};
PowerLawFit fit_power_law(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

}  // namespace antiplane
