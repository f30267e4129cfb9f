#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ghdo/aghdo.hpp"
#include "ghdo/dense.hpp"
#include "ghdo/types.hpp"

namespace ghdo {

/// Dense matrix acting on a few sites. The local basis index puts
/// support[0] in the most significant bit, with bit 1 meaning spin +1.
struct LocalOperator {
  std::vector<int> support;
  DenseMatrix matrix;

  int arity() const { return static_cast<int>(support.size()); }
  /// Throws InputError for repeated or out-of-range sites or a wrong shape.
  void validate(int sites) const;
};

struct ConnectedElement {
  Configuration config;
  cplx amplitude;
};

/// All sigma' with <sigma|op|sigma'> != 0, together with that amplitude.
std::vector<ConnectedElement> connected_elements(const LocalOperator& op, std::span<const Spin> sigma);

namespace pauli {
DenseMatrix identity();
DenseMatrix x();
DenseMatrix y();
DenseMatrix z();
/// sigma^- = |down><up|
DenseMatrix lowering();
DenseMatrix raising();
}  // namespace pauli

LocalOperator site_operator(int site, const DenseMatrix& m);
LocalOperator bond_operator(int i, int j, const DenseMatrix& m);

/// H = sum of local terms, jumps L_i; L_i^dagger L_i and the effective
/// non-Hermitian generator K = -iH - 1/2 sum L^dagger L are precomputed.
class LindbladModel {
 public:
  LindbladModel(int sites, std::vector<LocalOperator> hamiltonian, std::vector<LocalOperator> jumps);

  int sites() const { return sites_; }
  const std::vector<LocalOperator>& hamiltonian_terms() const { return hamiltonian_; }
  const std::vector<LocalOperator>& jump_operators() const { return jumps_; }
  const std::vector<LocalOperator>& jump_products() const { return jump_products_; }
  const std::vector<LocalOperator>& effective_terms() const { return effective_; }

 private:
  int sites_;
  std::vector<LocalOperator> hamiltonian_;
  std::vector<LocalOperator> jumps_;
  std::vector<LocalOperator> jump_products_;
  std::vector<LocalOperator> effective_;
};

/// Dissipative transverse-field Ising chain:
///   H = V/4 sum_<ij> Z_i Z_j + g/2 sum_i X_i,   L_i = sqrt(gamma) sigma^-_i.
/// With `periodic`, the bond (N-1, 0) is added once (also for N = 2).
LindbladModel build_tfim(int sites, double V, double g, double gamma, bool periodic);

/// Site-averaged Pauli operator along axis 'x', 'y' or 'z' as a list of
/// terms, each scaled by 1/N.
std::vector<LocalOperator> magnetization_terms(int sites, char axis);

/// A_loc(sigma) = sum_{sigma'} <sigma|A|sigma'> rho(sigma', sigma) / rho(sigma, sigma)
/// for A the sum of `terms`. Throws DegenerateAmplitude if rho(sigma, sigma)
/// underflows.
cplx a_loc(const AghdoModel& model, std::span<const LocalOperator> terms, std::span<const Spin> sigma);
cplx a_loc(const AghdoModel& model, const LocalOperator& op, std::span<const Spin> sigma);
/// Same, reusing an existing evaluation of sigma.
std::optional<cplx> a_loc(const AghdoModel& model, std::span<const LocalOperator> terms,
                          const AghdoModel::Evaluation& sigma);

/// L_loc(sigma, eta) = <sigma|L rho|eta> / <sigma|rho|eta>.
cplx l_loc(const AghdoModel& model, const LindbladModel& lind, std::span<const Spin> sigma,
           std::span<const Spin> eta);
/// Same on cached evaluations; nullopt when rho(sigma, eta) underflows.
std::optional<cplx> l_loc(const AghdoModel& model, const LindbladModel& lind,
                          const AghdoModel::Evaluation& sigma, const AghdoModel::Evaluation& eta,
                          cplx log_rho);

}  // namespace ghdo
