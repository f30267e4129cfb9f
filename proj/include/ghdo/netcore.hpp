#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "ghdo/amplitude_model.hpp"
#include "ghdo/types.hpp"

namespace ghdo {

/// exclusive: output block h sees input blocks < h.
/// inclusive: output block h sees input blocks <= h.
enum class MaskKind { exclusive, inclusive };

struct MaskedLayerSpec {
  int sites = 0;
  int in_features_per_site = 0;
  int out_features_per_site = 0;
  MaskKind mask = MaskKind::inclusive;

  int in_dim() const { return sites * in_features_per_site; }
  int out_dim() const { return sites * out_features_per_site; }
  /// Number of input units visible to output units of `site`.
  int visible_inputs(int site) const {
    return (mask == MaskKind::exclusive ? site : site + 1) * in_features_per_site;
  }
  bool connected(int out_unit, int in_unit) const {
    return in_unit < visible_inputs(out_unit / out_features_per_site);
  }
};

struct NetworkSpec {
  int sites = 0;
  int local_rank = 1;
  std::vector<int> feature_densities{8, 4};
  double init_width = 1e-2;
  std::uint64_t seed = 0;

  /// Throws ConfigError when the spec cannot describe a network.
  void validate() const;

  /// Exclusive first layer, inclusive deeper layers, output of 2*R per site.
  std::vector<MaskedLayerSpec> layers() const;

  /// Real parameter count d (two entries per complex weight or bias).
  std::size_t num_real_params() const;
};

using ParameterVector = std::vector<double>;

inline constexpr double kSeluLambda = 1.0507009873554804934193349852946;
inline constexpr double kSeluAlpha = 1.6732632423543772848170429916717;

double selu(double x);
double selu_derivative(double x);
/// SELU applied separately to the real and imaginary parts.
cplx selu_complex(cplx z);

/// Draws every real and imaginary part from a normal of standard deviation
/// `spec.init_width` truncated (by rejection) at two widths.
ParameterVector init_params(const NetworkSpec& spec);

ParameterVector flatten(std::span<const cplx> values);
std::vector<cplx> unflatten(std::span<const double> flat);

/// Complex masked autoregressive network producing phi[h, s, a].
///
/// Input features are the spins themselves (one per site). Hidden layers use
/// SELU; the output layer is linear. Masked weights are stored but never
/// read, so their gradients are exactly zero.
class MaskedNetwork final : public AmplitudeModel {
 public:
  explicit MaskedNetwork(NetworkSpec spec);
  MaskedNetwork(NetworkSpec spec, std::span<const double> params);

  const NetworkSpec& spec() const { return spec_; }
  const std::vector<MaskedLayerSpec>& layer_specs() const { return layers_; }

  int sites() const override { return spec_.sites; }
  int local_rank() const override { return spec_.local_rank; }
  std::size_t num_params() const override { return 2 * weights_.size(); }
  std::span<const double> parameters() const override;
  void set_parameters(std::span<const double> params) override;
  std::unique_ptr<AmplitudeModel> clone() const override;
  std::vector<std::size_t> active_parameters() const override;

  std::span<const cplx> complex_parameters() const { return weights_; }
  std::span<cplx> complex_parameters() { return weights_; }

  /// Complex offsets of layer `l`'s weight matrix (row-major, out x in) and
  /// bias vector inside complex_parameters().
  std::size_t weight_offset(int l) const { return offsets_[l].weights; }
  std::size_t bias_offset(int l) const { return offsets_[l].bias; }

  ForwardState make_state(std::span<const Spin> sigma) const override;
  void forward_sites(ForwardState& state, int first, int last) const override;
  void backward(const ForwardState& state, std::span<const cplx> cot_re,
                std::span<const cplx> cot_im, std::span<double> grad_re,
                std::span<double> grad_im) const override;

  /// Raw amplitudes for a full configuration.
  AmplitudeTable forward_amplitudes(std::span<const Spin> sigma) const;

 private:
  struct Offsets {
    std::size_t weights;
    std::size_t bias;
  };

  NetworkSpec spec_;
  std::vector<MaskedLayerSpec> layers_;
  std::vector<Offsets> offsets_;
  std::vector<cplx> weights_;
};

}  // namespace ghdo
