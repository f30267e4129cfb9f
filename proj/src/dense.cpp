#include "ghdo/dense.hpp"

#include <Eigen/Eigenvalues>

namespace ghdo {

int sites_from_dimension(Eigen::Index dim) {
  int n = 0;
  while ((Eigen::Index{1} << n) < dim) ++n;
  if ((Eigen::Index{1} << n) != dim) throw InputError("matrix dimension must be a power of two");
  return n;
}

double hermiticity_error(const DenseMatrix& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

DenseMatrix hermitize(const DenseMatrix& m) { return 0.5 * (m + m.adjoint()); }

double min_eigenvalue_hermitian(const DenseMatrix& m) {
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(hermitize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace ghdo
