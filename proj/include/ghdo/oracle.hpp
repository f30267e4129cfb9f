#pragma once

#include <span>

#include <Eigen/SparseCore>

#include "ghdo/aghdo.hpp"
#include "ghdo/dense.hpp"
#include "ghdo/gram_hadamard.hpp"
#include "ghdo/lindblad.hpp"

namespace ghdo {

// Exact dense reference computations for small systems.

using DenseDensityMatrix = DenseMatrix;
using SparseSuperoperator = Eigen::SparseMatrix<cplx>;

inline constexpr int kMaxLiouvillianSites = 6;
inline constexpr int kMaxDenseSites = 8;

/// Full 2^N x 2^N matrix of a local operator.
DenseMatrix embed_operator(const LocalOperator& op, int sites);
DenseMatrix embed_sum(std::span<const LocalOperator> terms, int sites);
DenseMatrix hamiltonian_matrix(const LindbladModel& lind);

/// Superoperator on column-stacked vec(rho) (index row + col * 2^N).
SparseSuperoperator sparse_liouvillian(const LindbladModel& lind);
DenseMatrix dense_liouvillian(const LindbladModel& lind);

/// L(rho) computed directly from the operator definitions, no vectorization.
DenseMatrix apply_liouvillian(const LindbladModel& lind, const DenseMatrix& rho);

/// Unique steady state, Hermitized and trace normalized. Throws
/// NonUniqueSteadyState when the null space is not one dimensional.
DenseDensityMatrix steady_state_dense(const LindbladModel& lind);

DenseDensityMatrix dense_from_model(const AghdoModel& model);
DenseDensityMatrix dense_from_model(const GhdoModel& model);

/// Minimum eigenvalue of the element-wise product of two Hermitian matrices.
double hadamard_product_check(const DenseMatrix& a, const DenseMatrix& b);

/// B_ij = sum_{l <= truncation} coefficients[l] * A_ij^l. Requires
/// nonnegative coefficients and max |A_ij| < radius.
DenseMatrix positive_series_apply(std::span<const double> coefficients, int truncation,
                                  const DenseMatrix& a, double radius);

cplx dense_observable(const DenseMatrix& rho, const LocalOperator& op);
cplx dense_observable(const DenseMatrix& rho, std::span<const LocalOperator> terms);
double dense_purity(const DenseMatrix& rho);
double dense_renyi2(const DenseMatrix& rho);

/// Count of singular values above `tol`.
int numerical_rank(const DenseMatrix& m, double tol = 1e-10);

}  // namespace ghdo
