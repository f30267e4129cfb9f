#include "ghdo/oracle.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

namespace ghdo {

namespace {

void require_sites(int sites, int max, const char* what) {
  if (sites > max)
    throw CapacityError(std::string(what) + " supports at most " + std::to_string(max) + " sites");
}

using Triplets = std::vector<Eigen::Triplet<cplx>>;

// Column-stacked vec: vec(A X B) = (B^T kron A) vec(X).

/// c * (I kron M): acts as M X.
void add_left(Triplets& t, const DenseMatrix& m, cplx c) {
  const Eigen::Index d = m.rows();
  for (Eigen::Index k = 0; k < d; ++k)
    for (Eigen::Index l = 0; l < d; ++l) {
      if (m(k, l) == cplx{}) continue;
      for (Eigen::Index j = 0; j < d; ++j) t.emplace_back(j * d + k, j * d + l, c * m(k, l));
    }
}

/// c * (M^T kron I): acts as X M.
void add_right(Triplets& t, const DenseMatrix& m, cplx c) {
  const Eigen::Index d = m.rows();
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) {
      const cplx v = m(j, i);
      if (v == cplx{}) continue;
      for (Eigen::Index k = 0; k < d; ++k) t.emplace_back(i * d + k, j * d + k, c * v);
    }
}

/// conj(L) kron L: acts as L X L^dagger.
void add_sandwich(Triplets& t, const DenseMatrix& l) {
  const Eigen::Index d = l.rows();
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) {
      const cplx a = std::conj(l(i, j));
      if (a == cplx{}) continue;
      for (Eigen::Index k = 0; k < d; ++k)
        for (Eigen::Index m = 0; m < d; ++m) {
          if (l(k, m) == cplx{}) continue;
          t.emplace_back(i * d + k, j * d + m, a * l(k, m));
        }
    }
}

}  // namespace

DenseMatrix embed_operator(const LocalOperator& op, int sites) {
  require_sites(sites, kMaxDenseSites, "embed_operator");
  op.validate(sites);
  const std::uint64_t dim = std::uint64_t{1} << sites;
  DenseMatrix out = DenseMatrix::Zero(dim, dim);
  for (std::uint64_t i = 0; i < dim; ++i)
    for (const auto& ce : connected_elements(op, index_to_config(i, sites)))
      out(i, config_to_index(ce.config)) += ce.amplitude;
  return out;
}

DenseMatrix embed_sum(std::span<const LocalOperator> terms, int sites) {
  const Eigen::Index dim = Eigen::Index{1} << sites;
  DenseMatrix out = DenseMatrix::Zero(dim, dim);
  for (const auto& t : terms) out += embed_operator(t, sites);
  return out;
}

DenseMatrix hamiltonian_matrix(const LindbladModel& lind) {
  return embed_sum(lind.hamiltonian_terms(), lind.sites());
}

SparseSuperoperator sparse_liouvillian(const LindbladModel& lind) {
  require_sites(lind.sites(), kMaxLiouvillianSites, "dense_liouvillian");
  const int n = lind.sites();
  const Eigen::Index d = Eigen::Index{1} << n;
  const cplx I{0.0, 1.0};
  Triplets t;
  const DenseMatrix h = hamiltonian_matrix(lind);
  add_left(t, h, -I);
  add_right(t, h, I);
  for (const auto& jump : lind.jump_operators()) {
    const DenseMatrix l = embed_operator(jump, n);
    const DenseMatrix ll = l.adjoint() * l;
    add_sandwich(t, l);
    add_left(t, ll, -0.5);
    add_right(t, ll, -0.5);
  }
  SparseSuperoperator s(d * d, d * d);
  s.setFromTriplets(t.begin(), t.end());
  s.makeCompressed();
  return s;
}

DenseMatrix dense_liouvillian(const LindbladModel& lind) { return DenseMatrix(sparse_liouvillian(lind)); }

DenseMatrix apply_liouvillian(const LindbladModel& lind, const DenseMatrix& rho) {
  const int n = lind.sites();
  const cplx I{0.0, 1.0};
  const DenseMatrix h = hamiltonian_matrix(lind);
  DenseMatrix out = -I * (h * rho - rho * h);
  for (const auto& jump : lind.jump_operators()) {
    const DenseMatrix l = embed_operator(jump, n);
    const DenseMatrix ll = l.adjoint() * l;
    out += l * rho * l.adjoint() - 0.5 * (ll * rho + rho * ll);
  }
  return out;
}

DenseDensityMatrix steady_state_dense(const LindbladModel& lind) {
  const int n = lind.sites();
  const Eigen::Index d = Eigen::Index{1} << n;
  const SparseSuperoperator liou = sparse_liouvillian(lind);

  // Small systems: count the null space from the full spectrum.
  if (d * d <= 256) {
    Eigen::ComplexEigenSolver<DenseMatrix> es(DenseMatrix(liou), false);
    const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    int zeros = 0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
      if (std::abs(es.eigenvalues()(i)) < 1e-9 * scale) ++zeros;
    if (zeros != 1)
      throw NonUniqueSteadyState("Liouvillian null space has dimension " + std::to_string(zeros));
  }

  // Replace the first equation with the trace condition Tr rho = 1.
  SparseSuperoperator a = liou;
  a.prune([](Eigen::Index row, Eigen::Index, const cplx&) { return row != 0; });
  for (Eigen::Index i = 0; i < d; ++i) a.coeffRef(0, i + i * d) = 1.0;
  a.makeCompressed();
  Eigen::SparseLU<SparseSuperoperator> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success) throw NonUniqueSteadyState("steady-state system is singular");
  DenseVector rhs = DenseVector::Zero(d * d);
  rhs(0) = 1.0;
  const DenseVector x = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !x.allFinite())
    throw NonUniqueSteadyState("steady-state solve failed");

  DenseMatrix rho = Eigen::Map<const DenseMatrix>(x.data(), d, d);
  rho = hermitize(rho);
  rho /= rho.trace();
  const DenseVector v = Eigen::Map<const DenseVector>(rho.data(), d * d);
  const double residual = (liou * v).norm();
  if (residual > 1e-8)
    throw NonUniqueSteadyState("steady-state residual " + std::to_string(residual) + " exceeds 1e-8");
  return rho;
}

DenseDensityMatrix dense_from_model(const AghdoModel& model) {
  const int n = model.sites();
  require_sites(n, kMaxDenseSites, "dense_from_model");
  const std::uint64_t dim = std::uint64_t{1} << n;
  std::vector<AghdoModel::Evaluation> evals;
  evals.reserve(dim);
  for (std::uint64_t i = 0; i < dim; ++i) evals.push_back(model.evaluate(index_to_config(i, n)));
  DenseMatrix rho(dim, dim);
  for (std::uint64_t i = 0; i < dim; ++i)
    for (std::uint64_t j = 0; j < dim; ++j) rho(i, j) = model.element(evals[i], evals[j]);
  return rho;
}

DenseDensityMatrix dense_from_model(const GhdoModel& model) {
  const int n = model.sites();
  require_sites(n, kMaxDenseSites, "dense_from_model");
  const std::uint64_t dim = std::uint64_t{1} << n;
  DenseMatrix rho(dim, dim);
  for (std::uint64_t i = 0; i < dim; ++i) {
    const auto si = index_to_config(i, n);
    for (std::uint64_t j = 0; j < dim; ++j) rho(i, j) = model.element(si, index_to_config(j, n));
  }
  return rho;
}

double hadamard_product_check(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != a.cols() || a.rows() != b.rows() || b.rows() != b.cols())
    throw InputError("Hadamard product needs square matrices of equal size");
  if (hermiticity_error(a) > 1e-10 || hermiticity_error(b) > 1e-10)
    throw InputError("Hadamard product check needs Hermitian inputs");
  return min_eigenvalue_hermitian(a.cwiseProduct(b));
}

DenseMatrix positive_series_apply(std::span<const double> coefficients, int truncation,
                                  const DenseMatrix& a, double radius) {
  if (truncation < 0) throw InputError("truncation order must be nonnegative");
  if (static_cast<std::size_t>(truncation) >= coefficients.size())
    throw InputError("not enough series coefficients for the requested truncation");
  for (int l = 0; l <= truncation; ++l)
    if (!(coefficients[l] >= 0.0)) throw InputError("series coefficients must be nonnegative");
  if (!(a.cwiseAbs().maxCoeff() < radius)) throw InputError("matrix entries exceed the convergence radius");
  DenseMatrix out = DenseMatrix::Constant(a.rows(), a.cols(), coefficients[0]);
  DenseMatrix power = DenseMatrix::Ones(a.rows(), a.cols());
  for (int l = 1; l <= truncation; ++l) {
    power = power.cwiseProduct(a);
    out += coefficients[l] * power;
  }
  return out;
}

cplx dense_observable(const DenseMatrix& rho, std::span<const LocalOperator> terms) {
  const int n = sites_from_dimension(rho.rows());
  const std::uint64_t dim = std::uint64_t{1} << n;
  cplx acc{};
  for (const auto& op : terms)
    for (std::uint64_t i = 0; i < dim; ++i)
      for (const auto& ce : connected_elements(op, index_to_config(i, n)))
        acc += ce.amplitude * rho(config_to_index(ce.config), i);
  return acc;
}

cplx dense_observable(const DenseMatrix& rho, const LocalOperator& op) {
  return dense_observable(rho, std::span<const LocalOperator>(&op, 1));
}

double dense_purity(const DenseMatrix& rho) { return (rho.adjoint() * rho).trace().real(); }

double dense_renyi2(const DenseMatrix& rho) { return -std::log2(dense_purity(rho)); }

int numerical_rank(const DenseMatrix& m, double tol) {
  Eigen::JacobiSVD<DenseMatrix> svd(m);
  int r = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > tol) ++r;
  return r;
}

}  // namespace ghdo
