#pragma once

#include <functional>
#include <span>
#include <vector>

#include "ghdo/dense.hpp"
#include "ghdo/types.hpp"

namespace ghdo {

/// Gram-Hadamard density operator with K factors of local rank R:
///   <sigma|rho|eta> = prod_{h<K} sum_a psi^(h)_{sigma,a} conj(psi^(h)_{eta,a}).
/// No normalization is imposed; the trace is whatever the factors give.
class GhdoModel {
 public:
  /// Fills the R amplitudes psi^(h)_{sigma, .} of one factor.
  using Factor = std::function<void(std::span<const Spin> sigma, std::span<cplx> out)>;

  GhdoModel(int sites, int rank);

  /// Factor given as a 2^N x R table indexed by basis index.
  static GhdoModel from_tables(int sites, const std::vector<DenseMatrix>& tables);

  void add_factor(Factor f) { factors_.push_back(std::move(f)); }

  int sites() const { return sites_; }
  int rank() const { return rank_; }
  int depth() const { return static_cast<int>(factors_.size()); }

  cplx element(std::span<const Spin> sigma, std::span<const Spin> eta) const;

 private:
  int sites_;
  int rank_;
  std::vector<Factor> factors_;
};

inline cplx ghdo_element(const GhdoModel& m, std::span<const Spin> sigma, std::span<const Spin> eta) {
  return m.element(sigma, eta);
}

/// I / 2^N with R = 2, K = N: factor h is delta_{2a-3, sigma_h} / sqrt(2).
GhdoModel maximally_mixed(int sites);

}  // namespace ghdo
