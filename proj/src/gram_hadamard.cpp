#include "ghdo/gram_hadamard.hpp"

#include <cmath>

namespace ghdo {

GhdoModel::GhdoModel(int sites, int rank) : sites_(sites), rank_(rank) {
  if (sites < 1) throw InputError("GHDO needs at least one site");
  if (rank < 1) throw InputError("GHDO rank must be >= 1");
}

GhdoModel GhdoModel::from_tables(int sites, const std::vector<DenseMatrix>& tables) {
  if (tables.empty()) throw InputError("GHDO needs at least one factor");
  const Eigen::Index dim = Eigen::Index{1} << sites;
  const int rank = static_cast<int>(tables.front().cols());
  GhdoModel m(sites, rank);
  for (const auto& t : tables) {
    if (t.rows() != dim || t.cols() != rank) throw InputError("GHDO factor table has wrong shape");
    m.add_factor([t](std::span<const Spin> s, std::span<cplx> out) {
      const auto row = static_cast<Eigen::Index>(config_to_index(s));
      for (Eigen::Index a = 0; a < t.cols(); ++a) out[a] = t(row, a);
    });
  }
  return m;
}

cplx GhdoModel::element(std::span<const Spin> sigma, std::span<const Spin> eta) const {
  check_configuration(sigma, sites_);
  check_configuration(eta, sites_);
  std::vector<cplx> a(rank_), b(rank_);
  cplx prod{1.0, 0.0};
  for (const auto& f : factors_) {
    f(sigma, a);
    f(eta, b);
    cplx g{};
    for (int k = 0; k < rank_; ++k) g += a[k] * std::conj(b[k]);
    prod *= g;
  }
  return prod;
}

GhdoModel maximally_mixed(int sites) {
  GhdoModel m(sites, 2);
  const double amp = 1.0 / std::sqrt(2.0);
  for (int h = 0; h < sites; ++h) {
    m.add_factor([h, amp](std::span<const Spin> s, std::span<cplx> out) {
      out[0] = s[h] == -1 ? amp : 0.0;
      out[1] = s[h] == 1 ? amp : 0.0;
    });
  }
  return m;
}

}  // namespace ghdo
