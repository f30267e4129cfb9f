#include "ghdo/aghdo.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>

namespace ghdo {

// ---------------------------------------------------------------------------
// TabulatedAmplitudes

TabulatedAmplitudes::TabulatedAmplitudes(int sites, int rank) : sites_(sites), rank_(rank) {
  if (sites < 1 || sites > kMaxSites)
    throw CapacityError("tabulated amplitudes support 1.." + std::to_string(kMaxSites) + " sites");
  if (rank < 1) throw InputError("local rank must be >= 1");
  std::size_t off = 0;
  for (int h = 0; h < sites; ++h) {
    offsets_.push_back(off);
    off += (std::size_t{1} << h) * 2 * static_cast<std::size_t>(rank);
  }
  table_.assign(off, cplx{});
}

TabulatedAmplitudes::TabulatedAmplitudes(int sites, int rank, std::span<const double> params)
    : TabulatedAmplitudes(sites, rank) {
  set_parameters(params);
}

TabulatedAmplitudes::TabulatedAmplitudes(int sites, int rank, const Generator& gen)
    : TabulatedAmplitudes(sites, rank) {
  for (int h = 0; h < sites; ++h)
    for (std::uint64_t p = 0; p < (std::uint64_t{1} << h); ++p)
      for (int s = 0; s < 2; ++s)
        for (int a = 0; a < rank; ++a) at(h, p, s, a) = gen(h, p, s, a);
}

std::span<const double> TabulatedAmplitudes::parameters() const {
  return {reinterpret_cast<const double*>(table_.data()), 2 * table_.size()};
}

void TabulatedAmplitudes::set_parameters(std::span<const double> params) {
  if (params.size() != num_params())
    throw InputError("tabulated model expects " + std::to_string(num_params()) + " parameters");
  for (std::size_t i = 0; i < table_.size(); ++i) table_[i] = {params[2 * i], params[2 * i + 1]};
}

std::unique_ptr<AmplitudeModel> TabulatedAmplitudes::clone() const {
  return std::make_unique<TabulatedAmplitudes>(*this);
}

std::uint64_t TabulatedAmplitudes::prefix_of(std::span<const Spin> sigma, int h) {
  return config_to_index(sigma.first(static_cast<std::size_t>(h)));
}

ForwardState TabulatedAmplitudes::make_state(std::span<const Spin> sigma) const {
  check_configuration(sigma, sites_);
  ForwardState st;
  st.input.assign(sigma.begin(), sigma.end());
  st.phi = AmplitudeTable(sites_, rank_);
  return st;
}

void TabulatedAmplitudes::forward_sites(ForwardState& st, int first, int last) const {
  for (int h = first; h < last; ++h) {
    const std::uint64_t p = prefix_of(st.input, h);
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < rank_; ++a) st.phi(h, s, a) = at(h, p, s, a);
  }
  if (first <= st.valid_sites && last > st.valid_sites) st.valid_sites = last;
}

void TabulatedAmplitudes::backward(const ForwardState& st, std::span<const cplx> cot_re,
                                   std::span<const cplx> cot_im, std::span<double> grad_re,
                                   std::span<double> grad_im) const {
  for (int h = 0; h < sites_; ++h) {
    const std::uint64_t p = prefix_of(st.input, h);
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < rank_; ++a) {
        const std::size_t k = index(h, p, s, a);
        const std::size_t c = (static_cast<std::size_t>(h) * 2 + s) * rank_ + a;
        grad_re[2 * k] += cot_re[c].real();
        grad_re[2 * k + 1] += cot_re[c].imag();
        grad_im[2 * k] += cot_im[c].real();
        grad_im[2 * k + 1] += cot_im[c].imag();
      }
  }
}

// ---------------------------------------------------------------------------
// AghdoModel

AghdoModel::AghdoModel(std::unique_ptr<AmplitudeModel> amplitudes) : amps_(std::move(amplitudes)) {
  if (!amps_) throw InputError("AghdoModel requires an amplitude model");
}

AghdoModel::AghdoModel(const NetworkSpec& spec)
    : amps_(std::make_unique<MaskedNetwork>(spec)) {}

AghdoModel::AghdoModel(const NetworkSpec& spec, std::span<const double> params)
    : amps_(std::make_unique<MaskedNetwork>(spec, params)) {}

AghdoModel::AghdoModel(const AghdoModel& other) : amps_(other.amps_->clone()) {}

AghdoModel& AghdoModel::operator=(const AghdoModel& other) {
  if (this != &other) amps_ = other.amps_->clone();
  return *this;
}

void AghdoModel::update_norms(Evaluation& e, int first) const {
  const int n = sites();
  e.norm2.resize(n);
  for (int h = first; h < n; ++h) {
    double s = 0.0;
    for (const cplx& v : e.state.phi.block(h)) s += std::norm(v);
    e.norm2[h] = s;
  }
}

AghdoModel::Evaluation AghdoModel::evaluate(std::span<const Spin> sigma) const {
  Evaluation e{amps_->forward(sigma), {}};
  update_norms(e, 0);
  return e;
}

AghdoModel::Evaluation AghdoModel::flipped(const Evaluation& base, int site) const {
  Evaluation e = base;
  e.state.input[site] = static_cast<Spin>(-e.state.input[site]);
  amps_->forward_sites(e.state, site + 1, sites());
  update_norms(e, site + 1);
  return e;
}

AghdoModel::Evaluation AghdoModel::evaluate_from(const Evaluation& base,
                                                 std::span<const Spin> config) const {
  const int n = sites();
  int first = 0;
  while (first < n && base.state.input[first] == config[first]) ++first;
  Evaluation e = base;
  if (first == n) return e;
  std::copy(config.begin(), config.end(), e.state.input.begin());
  amps_->forward_sites(e.state, first + 1, n);
  update_norms(e, first + 1);
  return e;
}

AghdoModel::Evaluation AghdoModel::begin_sequential(std::span<const Spin> initial) const {
  Evaluation e{amps_->make_state(initial), std::vector<double>(sites(), 0.0)};
  return e;
}

void AghdoModel::advance(Evaluation& e, int h) const {
  amps_->forward_sites(e.state, h, h + 1);
  double s = 0.0;
  for (const cplx& v : e.state.phi.block(h)) s += std::norm(v);
  e.norm2[h] = s;
}

cplx AghdoModel::psi(const Evaluation& e, int h, int s, int a) const {
  const double n = e.norm2[h];
  if (n <= 0.0) return {};
  return e.state.phi(h, s, a) / std::sqrt(n);
}

std::array<double, 2> AghdoModel::site_probabilities(const Evaluation& e, int h) const {
  const double n = e.norm2[h];
  if (n <= 0.0) return {0.5, 0.5};
  std::array<double, 2> p{0.0, 0.0};
  const int r = local_rank();
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < r; ++a) p[s] += std::norm(e.state.phi(h, s, a));
  p[0] /= n;
  p[1] /= n;
  return p;
}

namespace {

/// sum_k x_k conj(y_k) over the rank index of site block h. Exactly real
/// when both sides are the same configuration.
cplx site_overlap(const ForwardState& a, const ForwardState& b, int h, int r, bool same) {
  const int sa = spin_slot(a.input[h]);
  const int sb = spin_slot(b.input[h]);
  if (same) {
    double g = 0.0;
    for (int k = 0; k < r; ++k) g += std::norm(a.phi(h, sa, k));
    return g;
  }
  cplx g{};
  for (int k = 0; k < r; ++k) g += a.phi(h, sa, k) * std::conj(b.phi(h, sb, k));
  return g;
}

}  // namespace

std::optional<cplx> AghdoModel::try_log_element(const Evaluation& a, const Evaluation& b) const {
  // Canonical argument order keeps rho(b, a) == conj(rho(a, b)) bit for bit.
  const auto ia = config_to_index(a.config()), ib = config_to_index(b.config());
  if (ib < ia) {
    auto v = try_log_element(b, a);
    if (v) *v = std::conj(*v);
    return v;
  }
  static const double log_floor = std::log(kUnderflowModulus);
  const int n = sites();
  const int r = local_rank();
  cplx acc{};
  for (int h = 0; h < n; ++h) {
    if (a.norm2[h] <= 0.0 || b.norm2[h] <= 0.0) return std::nullopt;
    const cplx g = site_overlap(a.state, b.state, h, r, ia == ib);
    if (g == cplx{}) return std::nullopt;
    acc += std::log(g) - 0.5 * std::log(a.norm2[h] * b.norm2[h]);
  }
  if (!(acc.real() >= log_floor)) return std::nullopt;
  return acc;
}

cplx AghdoModel::log_element(std::span<const Spin> sigma, std::span<const Spin> eta) const {
  auto v = try_log_element(evaluate(sigma), evaluate(eta));
  if (!v) throw DegenerateAmplitude("rho(sigma, eta) is below the underflow threshold");
  return *v;
}

cplx AghdoModel::element(const Evaluation& a, const Evaluation& b) const {
  const auto ia = config_to_index(a.config()), ib = config_to_index(b.config());
  if (ib < ia) return std::conj(element(b, a));
  const int n = sites();
  const int r = local_rank();
  cplx prod{1.0, 0.0};
  for (int h = 0; h < n; ++h) {
    if (a.norm2[h] <= 0.0 || b.norm2[h] <= 0.0) return {};
    prod *= site_overlap(a.state, b.state, h, r, ia == ib) / std::sqrt(a.norm2[h] * b.norm2[h]);
  }
  return prod;
}

cplx AghdoModel::element(std::span<const Spin> sigma, std::span<const Spin> eta) const {
  return element(evaluate(sigma), evaluate(eta));
}

std::array<double, 2> AghdoModel::conditionals(std::span<const Spin> prefix) const {
  const int h = static_cast<int>(prefix.size());
  if (h >= sites()) throw InputError("prefix must be shorter than the number of sites");
  Configuration full(sites(), Spin{1});
  std::copy(prefix.begin(), prefix.end(), full.begin());
  Evaluation e{amps_->make_state(full), {}};
  amps_->forward_sites(e.state, 0, h + 1);
  e.norm2.assign(sites(), 0.0);
  for (const cplx& v : e.state.phi.block(h)) e.norm2[h] += std::norm(v);
  auto p = site_probabilities(e, h);
  const double s = p[0] + p[1];
  return {p[0] / s, p[1] / s};
}

double AghdoModel::diagonal(std::span<const Spin> sigma) const {
  const Evaluation e = evaluate(sigma);
  double p = 1.0;
  for (int h = 0; h < sites(); ++h) p *= site_probabilities(e, h)[spin_slot(sigma[h])];
  return p;
}

std::vector<cplx> AghdoModel::log_derivatives(std::span<const Spin> sigma,
                                              std::span<const Spin> eta) const {
  std::vector<cplx> out(num_params());
  if (!log_derivatives(evaluate(sigma), evaluate(eta), out))
    throw DegenerateAmplitude("log-derivative requested at a vanishing matrix element");
  return out;
}

bool AghdoModel::log_derivatives(const Evaluation& a, const Evaluation& b,
                                 std::span<cplx> out) const {
  if (!try_log_element(a, b)) return false;
  const int n = sites();
  const int r = local_rank();
  const std::size_t table = static_cast<std::size_t>(n) * 2 * r;
  std::vector<cplx> cra(table), cia(table), crb(table), cib(table);
  const cplx I{0.0, 1.0};

  // Wirtinger derivatives of L = log rho with respect to phi (sigma side,
  // "a") and phi' (eta side, "b"), then converted to the real-functional
  // cotangents of Re L and Im L expected by AmplitudeModel::backward.
  for (int h = 0; h < n; ++h) {
    const int sa = spin_slot(a.state.input[h]);
    const int sb = spin_slot(b.state.input[h]);
    const double na = a.norm2[h];
    const double nb = b.norm2[h];
    cplx P{}, Q{};
    for (int k = 0; k < r; ++k) {
      P += a.state.phi(h, sa, k) * std::conj(psi(b, h, sb, k));
      Q += b.state.phi(h, sb, k) * std::conj(psi(a, h, sa, k));
    }
    for (int s = 0; s < 2; ++s)
      for (int k = 0; k < r; ++k) {
        const std::size_t c = (static_cast<std::size_t>(h) * 2 + s) * r + k;
        const cplx pa = a.state.phi(h, s, k);
        const cplx pb = b.state.phi(h, s, k);

        cplx d = -0.5 * std::conj(pa) / na;
        if (s == sa) d += std::conj(psi(b, h, sb, k)) / P;
        const cplx dbar = -0.5 * pa / na;
        cra[c] = dbar + std::conj(d);
        cia[c] = -I * (dbar - std::conj(d));

        const cplx e = -0.5 * std::conj(pb) / nb;
        cplx ebar = -0.5 * pb / nb;
        if (s == sb) ebar += psi(a, h, sa, k) / std::conj(Q);
        crb[c] = ebar + std::conj(e);
        cib[c] = -I * (ebar - std::conj(e));
      }
  }

  const std::size_t d = num_params();
  std::vector<double> g_re(d, 0.0), g_im(d, 0.0);
  amps_->backward(a.state, cra, cia, g_re, g_im);
  amps_->backward(b.state, crb, cib, g_re, g_im);
  for (std::size_t k = 0; k < d; ++k) out[k] = {g_re[k], g_im[k]};
  return true;
}

// ---------------------------------------------------------------------------
// Exact constructors

namespace {

int sites_from_size(std::size_t size) {
  int n = 0;
  while ((std::size_t{1} << n) < size) ++n;
  if ((std::size_t{1} << n) != size || n < 1)
    throw InputError("table size must be 2^N with N >= 1");
  return n;
}

/// marginal[h][prefix] = probability of the length-h prefix.
std::vector<std::vector<double>> prefix_marginals(std::span<const double> p, int n) {
  std::vector<std::vector<double>> m(n + 1);
  m[n].assign(p.begin(), p.end());
  for (int h = n - 1; h >= 0; --h) {
    m[h].assign(std::size_t{1} << h, 0.0);
    for (std::size_t i = 0; i < m[h + 1].size(); ++i) m[h][i >> 1] += m[h + 1][i];
  }
  return m;
}

double conditional(const std::vector<std::vector<double>>& m, int h, std::uint64_t prefix, int s) {
  const double den = m[h][prefix];
  if (den <= 0.0) return 0.5;
  return m[h + 1][prefix * 2 + s] / den;
}

}  // namespace

AghdoModel from_classical(std::span<const double> probabilities) {
  const int n = sites_from_size(probabilities.size());
  double total = 0.0;
  for (double v : probabilities) {
    if (!(v >= 0.0)) throw InputError("classical probabilities must be nonnegative");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-10) throw InputError("classical probabilities must sum to 1");
  const auto m = prefix_marginals(probabilities, n);
  auto table = std::make_unique<TabulatedAmplitudes>(
      n, 2, [&](int h, std::uint64_t prefix, int s, int a) {
        return a == s ? cplx(std::sqrt(conditional(m, h, prefix, s)), 0.0) : cplx{};
      });
  return AghdoModel(std::move(table));
}

AghdoModel from_dense(const DenseMatrix& rho_in) {
  if (rho_in.rows() != rho_in.cols()) throw InputError("density matrix must be square");
  const int n = sites_from_dimension(rho_in.rows());
  if (n > 5) throw CapacityError("from_dense supports at most 5 sites");
  if (hermiticity_error(rho_in) > 1e-10) throw InputError("density matrix is not Hermitian");
  const DenseMatrix rho = hermitize(rho_in);
  if (std::abs(rho.trace() - cplx(1.0, 0.0)) > 1e-10) throw InputError("density matrix trace is not 1");
  if (min_eigenvalue_hermitian(rho) < -1e-10) throw InputError("density matrix is not positive semi-definite");

  const Eigen::Index dim = rho.rows();
  std::vector<double> p(dim);
  for (Eigen::Index i = 0; i < dim; ++i) p[i] = std::max(rho(i, i).real(), 0.0);
  const double ptot = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& v : p) v /= ptot;
  const auto m = prefix_marginals(p, n);

  // Coherence matrix and its Gram factor Psi = U sqrt(Lambda).
  DenseMatrix coh = DenseMatrix::Zero(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j)
      if (p[i] > 0.0 && p[j] > 0.0) coh(i, j) = rho(i, j) / std::sqrt(p[i] * p[j]);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(coh);
  const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const DenseMatrix factor = es.eigenvectors() * lam.asDiagonal();

  const int rank = static_cast<int>(dim);
  auto table = std::make_unique<TabulatedAmplitudes>(n, rank);
  for (int h = 0; h < n; ++h) {
    for (std::uint64_t prefix = 0; prefix < (std::uint64_t{1} << h); ++prefix) {
      double block = 0.0;
      for (int s = 0; s < 2; ++s) {
        const double c = std::sqrt(conditional(m, h, prefix, s));
        for (int a = 0; a < rank; ++a) {
          cplx v{};
          if (h + 1 < n)
            v = a == 0 ? cplx(c, 0.0) : cplx{};
          else
            v = c * factor(static_cast<Eigen::Index>(prefix * 2 + s), a);
          table->at(h, prefix, s, a) = v;
          block += std::norm(v);
        }
      }
      if (block <= 1e-300) {
        // Unreachable prefix: any normalized block leaves rho unchanged.
        for (int s = 0; s < 2; ++s)
          table->at(h, prefix, s, 0) = std::sqrt(conditional(m, h, prefix, s));
      }
    }
  }
  return AghdoModel(std::move(table));
}

}  // namespace ghdo
