#include "ghdo/netcore.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace ghdo {

void NetworkSpec::validate() const {
  if (sites < 1) throw ConfigError("network needs at least one site");
  if (local_rank < 1) throw ConfigError("local_rank must be >= 1");
  if (feature_densities.empty()) throw ConfigError("feature_densities must not be empty");
  for (int f : feature_densities)
    if (f < 1) throw ConfigError("feature densities must be positive");
  if (!(init_width > 0.0 && init_width <= 1.0))
    throw ConfigError("init_width must lie in (0, 1], got " + std::to_string(init_width));
}

std::vector<MaskedLayerSpec> NetworkSpec::layers() const {
  std::vector<MaskedLayerSpec> out;
  int in = 1;
  for (std::size_t l = 0; l < feature_densities.size(); ++l) {
    out.push_back({sites, in, feature_densities[l], l == 0 ? MaskKind::exclusive : MaskKind::inclusive});
    in = feature_densities[l];
  }
  out.push_back({sites, in, 2 * local_rank, MaskKind::inclusive});
  return out;
}

std::size_t NetworkSpec::num_real_params() const {
  std::size_t n = 0;
  for (const auto& l : layers())
    n += static_cast<std::size_t>(l.out_dim()) * (l.in_dim() + 1);
  return 2 * n;
}

double selu(double x) { return x > 0.0 ? kSeluLambda * x : kSeluLambda * kSeluAlpha * std::expm1(x); }

double selu_derivative(double x) { return x > 0.0 ? kSeluLambda : kSeluLambda * kSeluAlpha * std::exp(x); }

cplx selu_complex(cplx z) { return {selu(z.real()), selu(z.imag())}; }

ParameterVector init_params(const NetworkSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, spec.init_width);
  const double cut = 2.0 * spec.init_width;
  ParameterVector p(spec.num_real_params());
  for (double& v : p) {
    do {
      v = normal(rng);
    } while (std::abs(v) > cut);
  }
  return p;
}

ParameterVector flatten(std::span<const cplx> values) {
  ParameterVector out(2 * values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[2 * i] = values[i].real();
    out[2 * i + 1] = values[i].imag();
  }
  return out;
}

std::vector<cplx> unflatten(std::span<const double> flat) {
  if (flat.size() % 2 != 0) throw InputError("flat parameter vector must have even length");
  std::vector<cplx> out(flat.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = {flat[2 * i], flat[2 * i + 1]};
  return out;
}

MaskedNetwork::MaskedNetwork(NetworkSpec spec) : MaskedNetwork(spec, init_params(spec)) {}

MaskedNetwork::MaskedNetwork(NetworkSpec spec, std::span<const double> params)
    : spec_(std::move(spec)) {
  spec_.validate();
  layers_ = spec_.layers();
  std::size_t off = 0;
  for (const auto& l : layers_) {
    Offsets o{};
    o.weights = off;
    off += static_cast<std::size_t>(l.out_dim()) * l.in_dim();
    o.bias = off;
    off += l.out_dim();
    offsets_.push_back(o);
  }
  weights_.resize(off);
  set_parameters(params);
}

std::span<const double> MaskedNetwork::parameters() const {
  // std::complex<double> is layout compatible with double[2].
  return {reinterpret_cast<const double*>(weights_.data()), 2 * weights_.size()};
}

void MaskedNetwork::set_parameters(std::span<const double> params) {
  if (params.size() != num_params())
    throw InputError("parameter vector has length " + std::to_string(params.size()) +
                     ", network expects " + std::to_string(num_params()));
  for (std::size_t i = 0; i < weights_.size(); ++i) weights_[i] = {params[2 * i], params[2 * i + 1]};
}

std::unique_ptr<AmplitudeModel> MaskedNetwork::clone() const {
  return std::make_unique<MaskedNetwork>(*this);
}

std::vector<std::size_t> MaskedNetwork::active_parameters() const {
  std::vector<std::size_t> idx;
  auto push = [&idx](std::size_t c) {
    idx.push_back(2 * c);
    idx.push_back(2 * c + 1);
  };
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& L = layers_[l];
    for (int o = 0; o < L.out_dim(); ++o) {
      const int visible = L.visible_inputs(o / L.out_features_per_site);
      for (int i = 0; i < visible; ++i) push(offsets_[l].weights + std::size_t(o) * L.in_dim() + i);
    }
    for (int o = 0; o < L.out_dim(); ++o) push(offsets_[l].bias + o);
  }
  std::sort(idx.begin(), idx.end());
  return idx;
}

ForwardState MaskedNetwork::make_state(std::span<const Spin> sigma) const {
  check_configuration(sigma, spec_.sites);
  ForwardState st;
  st.input.assign(sigma.begin(), sigma.end());
  st.activations.resize(layers_.size());
  st.preactivations.resize(layers_.size() - 1);
  st.activations[0].resize(spec_.sites);
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    st.activations[l + 1].resize(layers_[l].out_dim());
    st.preactivations[l].resize(layers_[l].out_dim());
  }
  st.phi = AmplitudeTable(spec_.sites, spec_.local_rank);
  return st;
}

void MaskedNetwork::forward_sites(ForwardState& st, int first, int last) const {
  auto& in0 = st.activations[0];
  for (int j = 0; j < spec_.sites; ++j) in0[j] = cplx(st.input[j], 0.0);

  const std::size_t n_layers = layers_.size();
  for (std::size_t l = 0; l < n_layers; ++l) {
    const auto& L = layers_[l];
    const cplx* W = weights_.data() + offsets_[l].weights;
    const cplx* b = weights_.data() + offsets_[l].bias;
    const cplx* x = st.activations[l].data();
    const int in_dim = L.in_dim();
    const bool is_output = (l + 1 == n_layers);
    for (int site = first; site < last; ++site) {
      const int n_in = L.visible_inputs(site);
      for (int f = 0; f < L.out_features_per_site; ++f) {
        const int o = site * L.out_features_per_site + f;
        const cplx* row = W + static_cast<std::size_t>(o) * in_dim;
        cplx z = b[o];
        for (int i = 0; i < n_in; ++i) z += row[i] * x[i];
        if (is_output) {
          st.phi.values()[o] = z;
        } else {
          st.preactivations[l][o] = z;
          st.activations[l + 1][o] = selu_complex(z);
        }
      }
    }
  }
  if (last > st.valid_sites && first <= st.valid_sites) st.valid_sites = last;
}

void MaskedNetwork::backward(const ForwardState& st, std::span<const cplx> cot_re,
                             std::span<const cplx> cot_im, std::span<double> grad_re,
                             std::span<double> grad_im) const {
  const std::size_t n_layers = layers_.size();
  std::vector<cplx> g_re(cot_re.begin(), cot_re.end());
  std::vector<cplx> g_im(cot_im.begin(), cot_im.end());
  std::vector<cplx> next_re, next_im;

  for (std::size_t l = n_layers; l-- > 0;) {
    const auto& L = layers_[l];
    const cplx* W = weights_.data() + offsets_[l].weights;
    const cplx* x = st.activations[l].data();
    const int in_dim = L.in_dim();
    const int out_dim = L.out_dim();

    if (l + 1 < n_layers) {
      // Through SELU, separately on real and imaginary parts.
      const auto& z = st.preactivations[l];
      for (int o = 0; o < out_dim; ++o) {
        const double dr = selu_derivative(z[o].real());
        const double di = selu_derivative(z[o].imag());
        g_re[o] = {dr * g_re[o].real(), di * g_re[o].imag()};
        g_im[o] = {dr * g_im[o].real(), di * g_im[o].imag()};
      }
    }

    const bool need_input_grad = l > 0;
    if (need_input_grad) {
      next_re.assign(in_dim, cplx{});
      next_im.assign(in_dim, cplx{});
    }
    double* gw_re = grad_re.data() + 2 * offsets_[l].weights;
    double* gw_im = grad_im.data() + 2 * offsets_[l].weights;
    double* gb_re = grad_re.data() + 2 * offsets_[l].bias;
    double* gb_im = grad_im.data() + 2 * offsets_[l].bias;

    for (int o = 0; o < out_dim; ++o) {
      const cplx cr = g_re[o];
      const cplx ci = g_im[o];
      gb_re[2 * o] += cr.real();
      gb_re[2 * o + 1] += cr.imag();
      gb_im[2 * o] += ci.real();
      gb_im[2 * o + 1] += ci.imag();
      const int n_in = L.visible_inputs(o / L.out_features_per_site);
      const std::size_t row = static_cast<std::size_t>(o) * in_dim;
      for (int i = 0; i < n_in; ++i) {
        const cplx xc = std::conj(x[i]);
        const cplx wr = xc * cr;
        const cplx wi = xc * ci;
        gw_re[2 * (row + i)] += wr.real();
        gw_re[2 * (row + i) + 1] += wr.imag();
        gw_im[2 * (row + i)] += wi.real();
        gw_im[2 * (row + i) + 1] += wi.imag();
        if (need_input_grad) {
          const cplx wc = std::conj(W[row + i]);
          next_re[i] += wc * cr;
          next_im[i] += wc * ci;
        }
      }
    }
    if (need_input_grad) {
      g_re.swap(next_re);
      g_im.swap(next_im);
    }
  }
}

AmplitudeTable MaskedNetwork::forward_amplitudes(std::span<const Spin> sigma) const {
  return forward(sigma).phi;
}

}  // namespace ghdo
