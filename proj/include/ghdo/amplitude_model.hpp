#pragma once

#include <memory>
#include <span>
#include <vector>

#include "ghdo/types.hpp"

namespace ghdo {

/// Unnormalized per-site amplitudes phi[h, s, a]: h in [0, sites), s the
/// slot of the candidate spin value at h, a in [0, rank).
class AmplitudeTable {
 public:
  AmplitudeTable() = default;
  AmplitudeTable(int sites, int rank)
      : sites_(sites), rank_(rank),
        values_(static_cast<std::size_t>(sites) * 2 * rank) {}

  int sites() const { return sites_; }
  int rank() const { return rank_; }

  cplx& operator()(int h, int s, int a) { return values_[index(h, s, a)]; }
  const cplx& operator()(int h, int s, int a) const { return values_[index(h, s, a)]; }

  /// The 2*rank block of site h, ordered (s, a).
  std::span<cplx> block(int h) { return {values_.data() + index(h, 0, 0), std::size_t(2 * rank_)}; }
  std::span<const cplx> block(int h) const {
    return {values_.data() + index(h, 0, 0), std::size_t(2 * rank_)};
  }

  std::span<cplx> values() { return values_; }
  std::span<const cplx> values() const { return values_; }

 private:
  std::size_t index(int h, int s, int a) const {
    return (static_cast<std::size_t>(h) * 2 + s) * rank_ + a;
  }

  int sites_ = 0;
  int rank_ = 0;
  std::vector<cplx> values_;
};

/// Intermediate values of one forward evaluation. Blocks of `phi` for sites
/// below `valid_sites` are consistent with `input`.
struct ForwardState {
  Configuration input;
  std::vector<std::vector<cplx>> activations;  // model specific
  std::vector<std::vector<cplx>> preactivations;
  AmplitudeTable phi;
  int valid_sites = 0;
};

/// Source of the unnormalized autoregressive amplitudes phi_{sigma<=h, a}.
///
/// Every implementation must satisfy the autoregressive property: block h of
/// phi depends on input[0..h) only. The parameters are real (complex
/// parameters are exposed as interleaved real/imaginary pairs).
class AmplitudeModel {
 public:
  virtual ~AmplitudeModel() = default;

  virtual int sites() const = 0;
  virtual int local_rank() const = 0;

  virtual std::size_t num_params() const = 0;
  virtual std::span<const double> parameters() const = 0;
  virtual void set_parameters(std::span<const double> params) = 0;

  virtual std::unique_ptr<AmplitudeModel> clone() const = 0;

  /// Real parameter indices whose gradient can be nonzero. Structurally
  /// dead parameters (masked weights) are left out.
  virtual std::vector<std::size_t> active_parameters() const {
    std::vector<std::size_t> idx(num_params());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return idx;
  }

  /// Allocates a state for `sigma` without evaluating anything.
  virtual ForwardState make_state(std::span<const Spin> sigma) const = 0;

  /// Evaluates sites [first, last). Sites below `first` must already be valid.
  virtual void forward_sites(ForwardState& state, int first, int last) const = 0;

  /// Reverse pass for two real functionals at once. `cot_re`/`cot_im` hold,
  /// for every phi entry z, df/dRe z + i df/dIm z; the parameter gradients
  /// are accumulated into `grad_re`/`grad_im`.
  virtual void backward(const ForwardState& state, std::span<const cplx> cot_re,
                        std::span<const cplx> cot_im, std::span<double> grad_re,
                        std::span<double> grad_im) const = 0;

  ForwardState forward(std::span<const Spin> sigma) const {
    ForwardState st = make_state(sigma);
    forward_sites(st, 0, sites());
    return st;
  }
};

}  // namespace ghdo
