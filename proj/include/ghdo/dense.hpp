#pragma once

#include <Eigen/Dense>

#include "ghdo/types.hpp"

namespace ghdo {

using DenseMatrix = Eigen::MatrixXcd;
using DenseVector = Eigen::VectorXcd;

/// Number of sites encoded by a 2^N dimensional matrix; throws otherwise.
int sites_from_dimension(Eigen::Index dim);

double hermiticity_error(const DenseMatrix& m);
DenseMatrix hermitize(const DenseMatrix& m);
double min_eigenvalue_hermitian(const DenseMatrix& m);

}  // namespace ghdo
