#include "ghdo/lindblad.hpp"

#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

namespace ghdo {

void LocalOperator::validate(int sites) const {
  if (support.empty() || support.size() > 2)
    throw InputError("local operators act on one or two sites");
  std::set<int> seen;
  for (int s : support) {
    if (s < 0 || s >= sites) throw InputError("operator support site " + std::to_string(s) + " out of range");
    if (!seen.insert(s).second) throw InputError("operator support sites must be distinct");
  }
  const Eigen::Index dim = Eigen::Index{1} << support.size();
  if (matrix.rows() != dim || matrix.cols() != dim)
    throw InputError("operator matrix must be 2^k x 2^k for a k-site support");
}

std::vector<ConnectedElement> connected_elements(const LocalOperator& op, std::span<const Spin> sigma) {
  const int k = op.arity();
  int row = 0;
  for (int site : op.support) row = (row << 1) | spin_slot(sigma[site]);
  std::vector<ConnectedElement> out;
  for (int col = 0; col < (1 << k); ++col) {
    const cplx amp = op.matrix(row, col);
    if (amp == cplx{}) continue;
    Configuration c(sigma.begin(), sigma.end());
    for (int j = 0; j < k; ++j) c[op.support[j]] = slot_spin((col >> (k - 1 - j)) & 1);
    out.push_back({std::move(c), amp});
  }
  return out;
}

namespace pauli {

DenseMatrix identity() { return DenseMatrix::Identity(2, 2); }

DenseMatrix x() {
  DenseMatrix m = DenseMatrix::Zero(2, 2);
  m(0, 1) = 1.0;
  m(1, 0) = 1.0;
  return m;
}

DenseMatrix y() {
  // basis order (down, up): <down|Y|up> = i
  DenseMatrix m = DenseMatrix::Zero(2, 2);
  m(0, 1) = cplx(0.0, 1.0);
  m(1, 0) = cplx(0.0, -1.0);
  return m;
}

DenseMatrix z() {
  DenseMatrix m = DenseMatrix::Zero(2, 2);
  m(0, 0) = -1.0;
  m(1, 1) = 1.0;
  return m;
}

DenseMatrix lowering() {
  DenseMatrix m = DenseMatrix::Zero(2, 2);
  m(0, 1) = 1.0;
  return m;
}

DenseMatrix raising() {
  DenseMatrix m = DenseMatrix::Zero(2, 2);
  m(1, 0) = 1.0;
  return m;
}

}  // namespace pauli

LocalOperator site_operator(int site, const DenseMatrix& m) { return {{site}, m}; }

LocalOperator bond_operator(int i, int j, const DenseMatrix& m) { return {{i, j}, m}; }

LindbladModel::LindbladModel(int sites, std::vector<LocalOperator> hamiltonian,
                             std::vector<LocalOperator> jumps)
    : sites_(sites), hamiltonian_(std::move(hamiltonian)), jumps_(std::move(jumps)) {
  if (sites < 1) throw InputError("Lindblad model needs at least one site");
  for (const auto& t : hamiltonian_) {
    t.validate(sites);
    if (hermiticity_error(t.matrix) > 1e-12) throw InputError("Hamiltonian terms must be Hermitian");
  }
  for (const auto& l : jumps_) {
    l.validate(sites);
    jump_products_.push_back({l.support, l.matrix.adjoint() * l.matrix});
  }
  const cplx I{0.0, 1.0};
  for (const auto& t : hamiltonian_) effective_.push_back({t.support, -I * t.matrix});
  for (const auto& p : jump_products_) effective_.push_back({p.support, -0.5 * p.matrix});
}

LindbladModel build_tfim(int sites, double V, double g, double gamma, bool periodic) {
  if (sites < 1) throw InputError("TFIM needs at least one site");
  if (gamma < 0.0) throw InputError("decay rate gamma must be nonnegative");
  DenseMatrix zz = DenseMatrix::Zero(4, 4);
  zz.diagonal() << 1.0, -1.0, -1.0, 1.0;
  std::vector<LocalOperator> h;
  if (sites >= 2) {
    for (int i = 0; i + 1 < sites; ++i) h.push_back(bond_operator(i, i + 1, (V / 4.0) * zz));
    if (periodic) h.push_back(bond_operator(sites - 1, 0, (V / 4.0) * zz));
  }
  for (int i = 0; i < sites; ++i) h.push_back(site_operator(i, (g / 2.0) * pauli::x()));
  std::vector<LocalOperator> jumps;
  for (int i = 0; i < sites; ++i) jumps.push_back(site_operator(i, std::sqrt(gamma) * pauli::lowering()));
  return LindbladModel(sites, std::move(h), std::move(jumps));
}

std::vector<LocalOperator> magnetization_terms(int sites, char axis) {
  DenseMatrix m;
  switch (axis) {
    case 'x': m = pauli::x(); break;
    case 'y': m = pauli::y(); break;
    case 'z': m = pauli::z(); break;
    default: throw InputError(std::string("unknown magnetization axis '") + axis + "'");
  }
  std::vector<LocalOperator> out;
  for (int i = 0; i < sites; ++i) out.push_back(site_operator(i, m / double(sites)));
  return out;
}

namespace {

/// Evaluations of configurations near a fixed pair, derived incrementally.
class EvaluationCache {
 public:
  EvaluationCache(const AghdoModel& model, const AghdoModel::Evaluation& a,
                  const AghdoModel::Evaluation& b)
      : model_(model), a_(a), b_(b) {
    ia_ = config_to_index(a.config());
    ib_ = config_to_index(b.config());
  }

  const AghdoModel::Evaluation& get(std::uint64_t idx) {
    if (idx == ia_) return a_;
    if (idx == ib_) return b_;
    auto it = cache_.find(idx);
    if (it != cache_.end()) return it->second;
    const Configuration c = index_to_config(idx, model_.sites());
    // Rebase on whichever known evaluation shares the longer prefix.
    const int la = common_prefix(a_.config(), c);
    const int lb = common_prefix(b_.config(), c);
    auto e = model_.evaluate_from(la >= lb ? a_ : b_, c);
    return cache_.emplace(idx, std::move(e)).first->second;
  }

 private:
  static int common_prefix(std::span<const Spin> x, std::span<const Spin> y) {
    int n = 0;
    while (n < static_cast<int>(x.size()) && x[n] == y[n]) ++n;
    return n;
  }

  const AghdoModel& model_;
  const AghdoModel::Evaluation& a_;
  const AghdoModel::Evaluation& b_;
  std::uint64_t ia_, ib_;
  std::unordered_map<std::uint64_t, AghdoModel::Evaluation> cache_;
};

}  // namespace

std::optional<cplx> a_loc(const AghdoModel& model, std::span<const LocalOperator> terms,
                          const AghdoModel::Evaluation& sigma) {
  const auto log_diag = model.try_log_element(sigma, sigma);
  if (!log_diag) return std::nullopt;
  const std::uint64_t self = config_to_index(sigma.config());
  std::map<std::uint64_t, cplx> coeff;
  for (const auto& op : terms)
    for (auto& ce : connected_elements(op, sigma.config())) coeff[config_to_index(ce.config)] += ce.amplitude;

  EvaluationCache cache(model, sigma, sigma);
  cplx acc{};
  for (const auto& [idx, c] : coeff) {
    if (idx == self) {
      acc += c;
      continue;
    }
    const auto lr = model.try_log_element(cache.get(idx), sigma);
    if (lr) acc += c * std::exp(*lr - *log_diag);
  }
  return acc;
}

cplx a_loc(const AghdoModel& model, std::span<const LocalOperator> terms, std::span<const Spin> sigma) {
  auto v = a_loc(model, terms, model.evaluate(sigma));
  if (!v) throw DegenerateAmplitude("rho(sigma, sigma) underflows");
  return *v;
}

cplx a_loc(const AghdoModel& model, const LocalOperator& op, std::span<const Spin> sigma) {
  return a_loc(model, std::span<const LocalOperator>(&op, 1), sigma);
}

std::optional<cplx> l_loc(const AghdoModel& model, const LindbladModel& lind,
                          const AghdoModel::Evaluation& sigma, const AghdoModel::Evaluation& eta,
                          cplx log_rho) {
  const std::uint64_t is = config_to_index(sigma.config());
  const std::uint64_t ie = config_to_index(eta.config());

  // Coefficients of rho(sigma', eta), rho(sigma, eta') and rho(sigma', eta').
  std::map<std::uint64_t, cplx> left, right;
  std::map<std::pair<std::uint64_t, std::uint64_t>, cplx> both;
  for (const auto& k : lind.effective_terms()) {
    for (auto& ce : connected_elements(k, sigma.config())) left[config_to_index(ce.config)] += ce.amplitude;
    for (auto& ce : connected_elements(k, eta.config()))
      right[config_to_index(ce.config)] += std::conj(ce.amplitude);
  }
  for (const auto& l : lind.jump_operators()) {
    const auto cs = connected_elements(l, sigma.config());
    if (cs.empty()) continue;
    const auto ce = connected_elements(l, eta.config());
    for (const auto& s : cs)
      for (const auto& e : ce)
        both[{config_to_index(s.config), config_to_index(e.config)}] += s.amplitude * std::conj(e.amplitude);
  }

  EvaluationCache cache(model, sigma, eta);
  auto ratio = [&](std::uint64_t x, std::uint64_t y) -> cplx {
    if (x == is && y == ie) return 1.0;
    const auto lr = model.try_log_element(cache.get(x), cache.get(y));
    return lr ? std::exp(*lr - log_rho) : cplx{};
  };

  cplx acc{};
  for (const auto& [x, c] : left) acc += c * ratio(x, ie);
  for (const auto& [y, c] : right) acc += c * ratio(is, y);
  for (const auto& [xy, c] : both) acc += c * ratio(xy.first, xy.second);
  return acc;
}

cplx l_loc(const AghdoModel& model, const LindbladModel& lind, std::span<const Spin> sigma,
           std::span<const Spin> eta) {
  const auto a = model.evaluate(sigma);
  const auto b = model.evaluate(eta);
  const auto lr = model.try_log_element(a, b);
  if (!lr) throw DegenerateAmplitude("rho(sigma, eta) underflows");
  return *l_loc(model, lind, a, b, *lr);
}

}  // namespace ghdo
