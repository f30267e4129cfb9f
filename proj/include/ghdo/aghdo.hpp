#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "ghdo/amplitude_model.hpp"
#include "ghdo/dense.hpp"
#include "ghdo/netcore.hpp"
#include "ghdo/types.hpp"

namespace ghdo {

/// Amplitudes stored explicitly for every prefix: the parameters are the
/// entries phi[h, sigma_<h, s, a] themselves. Used for exact constructions.
class TabulatedAmplitudes final : public AmplitudeModel {
 public:
  using Generator = std::function<cplx(int h, std::uint64_t prefix, int s, int a)>;

  TabulatedAmplitudes(int sites, int rank);
  TabulatedAmplitudes(int sites, int rank, std::span<const double> params);
  TabulatedAmplitudes(int sites, int rank, const Generator& gen);

  static constexpr int kMaxSites = 14;

  int sites() const override { return sites_; }
  int local_rank() const override { return rank_; }
  std::size_t num_params() const override { return 2 * table_.size(); }
  std::span<const double> parameters() const override;
  void set_parameters(std::span<const double> params) override;
  std::unique_ptr<AmplitudeModel> clone() const override;

  cplx& at(int h, std::uint64_t prefix, int s, int a) { return table_[index(h, prefix, s, a)]; }
  const cplx& at(int h, std::uint64_t prefix, int s, int a) const {
    return table_[index(h, prefix, s, a)];
  }

  ForwardState make_state(std::span<const Spin> sigma) const override;
  void forward_sites(ForwardState& state, int first, int last) const override;
  void backward(const ForwardState& state, std::span<const cplx> cot_re,
                std::span<const cplx> cot_im, std::span<double> grad_re,
                std::span<double> grad_im) const override;

 private:
  std::size_t index(int h, std::uint64_t prefix, int s, int a) const {
    return offsets_[h] + (prefix * 2 + s) * rank_ + a;
  }
  static std::uint64_t prefix_of(std::span<const Spin> sigma, int h);

  int sites_;
  int rank_;
  std::vector<std::size_t> offsets_;
  std::vector<cplx> table_;
};

/// Autoregressive Gram-Hadamard density operator
///   <sigma|rho|eta> = prod_h sum_a psi_{sigma<=h,a} conj(psi_{eta<=h,a})
/// with psi the per-site normalization of the raw amplitudes phi.
class AghdoModel {
 public:
  /// Per-configuration cache: forward state and per-site squared norms.
  struct Evaluation {
    ForwardState state;
    std::vector<double> norm2;

    std::span<const Spin> config() const { return state.input; }
  };

  explicit AghdoModel(std::unique_ptr<AmplitudeModel> amplitudes);
  explicit AghdoModel(const NetworkSpec& spec);
  AghdoModel(const NetworkSpec& spec, std::span<const double> params);

  AghdoModel(const AghdoModel& other);
  AghdoModel& operator=(const AghdoModel& other);
  AghdoModel(AghdoModel&&) noexcept = default;
  AghdoModel& operator=(AghdoModel&&) noexcept = default;

  int sites() const { return amps_->sites(); }
  int local_rank() const { return amps_->local_rank(); }
  std::size_t num_params() const { return amps_->num_params(); }
  std::span<const double> parameters() const { return amps_->parameters(); }
  void set_parameters(std::span<const double> p) { amps_->set_parameters(p); }

  const AmplitudeModel& amplitudes() const { return *amps_; }
  /// Null unless the amplitudes come from a MaskedNetwork.
  const MaskedNetwork* network() const { return dynamic_cast<const MaskedNetwork*>(amps_.get()); }

  Evaluation evaluate(std::span<const Spin> sigma) const;
  /// Evaluation of `base` with the spin at `site` flipped; only sites after
  /// `site` are recomputed.
  Evaluation flipped(const Evaluation& base, int site) const;
  /// Evaluation of `config`, recomputing only the sites after the first
  /// position where it differs from `base`.
  Evaluation evaluate_from(const Evaluation& base, std::span<const Spin> config) const;

  /// Evaluation with no site computed yet, for site-by-site construction
  /// (autoregressive sampling). `advance(e, h)` computes block h, which
  /// requires blocks < h and spins < h to be final.
  Evaluation begin_sequential(std::span<const Spin> initial) const;
  void advance(Evaluation& e, int h) const;

  /// Normalized amplitude psi[h, s, a] of an evaluation.
  cplx psi(const Evaluation& e, int h, int s, int a) const;
  /// p(s | sigma_<h) for both slots of site h.
  std::array<double, 2> site_probabilities(const Evaluation& e, int h) const;

  /// Returns nullopt when |rho| is below kUnderflowModulus.
  std::optional<cplx> try_log_element(const Evaluation& a, const Evaluation& b) const;

  cplx log_element(std::span<const Spin> sigma, std::span<const Spin> eta) const;
  cplx element(std::span<const Spin> sigma, std::span<const Spin> eta) const;
  cplx element(const Evaluation& a, const Evaluation& b) const;

  /// p(sigma_h = -1 | prefix), p(sigma_h = +1 | prefix) with h = prefix.size().
  std::array<double, 2> conditionals(std::span<const Spin> prefix) const;
  double diagonal(std::span<const Spin> sigma) const;

  /// O_k = d log rho(sigma, eta) / d w_k for every real parameter w_k.
  std::vector<cplx> log_derivatives(std::span<const Spin> sigma, std::span<const Spin> eta) const;
  /// Writes O into `out` (length num_params()); returns false when the
  /// element is degenerate, leaving `out` unspecified.
  bool log_derivatives(const Evaluation& a, const Evaluation& b, std::span<cplx> out) const;

 private:
  void update_norms(Evaluation& e, int first) const;

  std::unique_ptr<AmplitudeModel> amps_;
};

/// Classical state p(sigma) delta_{sigma,eta} as a tabulated R = 2 model.
AghdoModel from_classical(std::span<const double> probabilities);

/// Any density matrix as a tabulated R = 2^N model (N <= 5).
AghdoModel from_dense(const DenseMatrix& rho);

}  // namespace ghdo
