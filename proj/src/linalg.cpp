#include "antiplane/linalg.hpp"

#include <Eigen/CholmodSupport>
#include <Eigen/IterativeLinearSolvers>

#include <cmath>

namespace antiplane {

struct CholeskyFactor::Impl {
  Eigen::CholmodSupernodalLLT<SparseMatrix, Eigen::Lower> llt;
  Eigen::Index rows = -1;
  Eigen::Index nonzeros = -1;
  bool analyzed = false;

  Impl() {
    llt.cholmod().print = 0;
    // CHOLMOD reports indefiniteness through `info()`; keep going quietly
    llt.cholmod().quick_return_if_not_posdef = 1;
  }
};

CholeskyFactor::CholeskyFactor() : impl_(std::make_unique<Impl>()) {}
CholeskyFactor::CholeskyFactor(const SparseMatrix& a) : CholeskyFactor() { factorize(a); }
CholeskyFactor::~CholeskyFactor() = default;
CholeskyFactor::CholeskyFactor(CholeskyFactor&&) noexcept = default;
CholeskyFactor& CholeskyFactor::operator=(CholeskyFactor&&) noexcept = default;

bool CholeskyFactor::factorize(const SparseMatrix& a) {
  if (!impl_->analyzed || impl_->rows != a.rows() || impl_->nonzeros != a.nonZeros()) {
    impl_->llt.analyzePattern(a);
    impl_->analyzed = true;
    impl_->rows = a.rows();
    impl_->nonzeros = a.nonZeros();
  }
  impl_->llt.factorize(a);
  ok_ = impl_->llt.info() == Eigen::Success;
  return ok_;
}

Eigen::VectorXd CholeskyFactor::solve(const Eigen::VectorXd& b) const {
  if (!ok_) throw SolverError("solve with a failed Cholesky factorization");
  return impl_->llt.solve(b);
}

Eigen::MatrixXd CholeskyFactor::solve(const Eigen::MatrixXd& b) const {
  if (!ok_) throw SolverError("solve with a failed Cholesky factorization");
  return impl_->llt.solve(b);
}

CgResult conjugate_gradient(const SparseMatrix& a, const Eigen::VectorXd& b, Eigen::VectorXd& x, double tol,
                            int max_iterations) {
  if (b.norm() == 0.0) {
    x = Eigen::VectorXd::Zero(b.size());
    return {};
  }
  Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::IncompleteCholesky<double>> cg;
  cg.setTolerance(tol);
  cg.setMaxIterations(max_iterations);
  cg.compute(a);
  if (cg.info() != Eigen::Success) throw SolverError("preconditioner setup failed");
  if (x.size() != b.size()) x = Eigen::VectorXd::Zero(b.size());
  x = cg.solveWithGuess(b, x);
  const double rel = (b - a * x).norm() / b.norm();
  if (cg.info() != Eigen::Success || rel > tol * 10.0)
    throw SolverError("conjugate gradients did not converge (relative residual " + std::to_string(rel) + ")", rel);
  return {static_cast<int>(cg.iterations()), rel};
}

PowerLawFit fit_power_law(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("power-law fit needs >= 2 points");
  const Eigen::ArrayXd lx = x.array().log();
  const Eigen::ArrayXd ly = y.array().log();
  const double mx = lx.mean();
  const double my = ly.mean();
  const double sxx = (lx - mx).square().sum();
  if (sxx == 0.0) throw std::invalid_argument("power-law fit needs distinct abscissae");
  const double slope = ((lx - mx) * (ly - my)).sum() / sxx;
  return {slope, std::exp(my - slope * mx)};
}

}  // namespace antiplane
