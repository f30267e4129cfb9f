#include "ghdo/sampling.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "ghdo/parallel.hpp"

namespace ghdo {

namespace {

constexpr std::size_t kChunk = 64;

/// One independent stream per chunk of samples, so that results do not
/// depend on how chunks are spread over workers.
Rng chunk_rng(std::uint64_t base, std::size_t chunk) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(chunk), static_cast<std::uint32_t>(chunk >> 32)};
  return Rng(seq);
}

template <class F>
void for_each_chunk(std::size_t n, Rng& rng, int threads, F&& body) {
  const std::uint64_t base = rng();
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  parallel_for(chunks, threads, [&](std::size_t c) {
    Rng local = chunk_rng(base, c);
    const std::size_t end = std::min(n, (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) body(i, local);
  });
}

std::array<double, 2> floored(std::array<double, 2> p) {
  p[0] = std::max(p[0], kConditionalFloor);
  p[1] = std::max(p[1], kConditionalFloor);
  const double s = p[0] + p[1];
  return {p[0] / s, p[1] / s};
}

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

/// Samples sigma autoregressively; returns the completed evaluation and
/// accumulates log p(sigma) with floored conditionals.
AghdoModel::Evaluation draw_sequence(const AghdoModel& model, Rng& rng, double& log_p) {
  const int n = model.sites();
  Configuration init(n, Spin{1});
  auto e = model.begin_sequential(init);
  log_p = 0.0;
  for (int h = 0; h < n; ++h) {
    model.advance(e, h);
    const auto p = floored(model.site_probabilities(e, h));
    const int s = uniform01(rng) < p[1] ? 1 : 0;
    e.state.input[h] = slot_spin(s);
    log_p += std::log(p[s]);
  }
  return e;
}

}  // namespace

std::string config_string(std::span<const Spin> s) {
  std::string out;
  for (Spin v : s) out.push_back(v > 0 ? '+' : '-');
  return out;
}

std::vector<Configuration> sample_diagonal(const AghdoModel& model, std::size_t n, Rng& rng,
                                           int threads) {
  if (n == 0) throw InputError("sample count must be positive");
  std::vector<Configuration> out(n);
  for_each_chunk(n, rng, threads, [&](std::size_t i, Rng& local) {
    double lp = 0.0;
    auto e = draw_sequence(model, local, lp);
    out[i] = std::move(e.state.input);
  });
  return out;
}

std::vector<JointSample> sample_joint_alpha(const AghdoModel& model, double alpha, std::size_t n,
                                            Rng& rng, int threads) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InputError("alpha must lie in [0, 1]");
  if (n == 0) throw InputError("sample count must be positive");
  const int sites = model.sites();
  std::vector<JointSample> out(n);
  for_each_chunk(n, rng, threads, [&](std::size_t i, Rng& local) {
    JointSample& js = out[i];
    double log_p = 0.0;
    const auto es = draw_sequence(model, local, log_p);

    auto ee = model.begin_sequential(es.config());
    for (int h = 0; h < sites; ++h) {
      model.advance(ee, h);
      const auto q = floored(model.site_probabilities(ee, h));
      const bool from_model = uniform01(local) < alpha;
      const int s = from_model ? (uniform01(local) < q[1] ? 1 : 0) : spin_slot(es.state.input[h]);
      ee.state.input[h] = slot_spin(s);
      const double copy = (ee.state.input[h] == es.state.input[h]) ? 1.0 - alpha : 0.0;
      log_p += std::log(alpha * q[s] + copy);
    }

    js.sigma = es.state.input;
    js.eta = ee.state.input;
    js.log_p_alpha = log_p;
    if (const auto lr = model.try_log_element(es, ee)) {
      js.log_rho = *lr;
      js.weight = std::exp(2.0 * lr->real() - log_p);
    } else {
      js.log_rho = {-std::numeric_limits<double>::infinity(), 0.0};
      js.weight = 0.0;
    }
  });
  return out;
}

double log_p_alpha(const AghdoModel& model, double alpha, std::span<const Spin> sigma,
                   std::span<const Spin> eta) {
  const auto es = model.evaluate(sigma);
  const auto ee = model.evaluate(eta);
  double lp = 0.0;
  for (int h = 0; h < model.sites(); ++h) {
    const double p = model.site_probabilities(es, h)[spin_slot(sigma[h])];
    const double q = model.site_probabilities(ee, h)[spin_slot(eta[h])];
    lp += std::log(p) + std::log(alpha * q + (sigma[h] == eta[h] ? 1.0 - alpha : 0.0));
  }
  return lp;
}

std::vector<JointSample> full_summation_batch(const AghdoModel& model) {
  const int n = model.sites();
  if (n > 7) throw CapacityError("full summation supports at most 7 sites");
  const std::uint64_t dim = std::uint64_t{1} << n;
  std::vector<AghdoModel::Evaluation> evals;
  evals.reserve(dim);
  for (std::uint64_t i = 0; i < dim; ++i) evals.push_back(model.evaluate(index_to_config(i, n)));
  std::vector<JointSample> out;
  out.reserve(dim * dim);
  for (std::uint64_t i = 0; i < dim; ++i)
    for (std::uint64_t j = 0; j < dim; ++j) {
      JointSample js;
      js.sigma = evals[i].state.input;
      js.eta = evals[j].state.input;
      if (const auto lr = model.try_log_element(evals[i], evals[j])) {
        js.log_rho = *lr;
        js.weight = std::exp(2.0 * lr->real());
      } else {
        js.log_rho = {-std::numeric_limits<double>::infinity(), 0.0};
      }
      out.push_back(std::move(js));
    }
  return out;
}

EstimatorResult weighted_mean(std::span<const cplx> values, std::span<const double> weights) {
  const std::size_t n = values.size();
  if (n == 0 || weights.size() != n) throw InputError("weighted_mean needs matching nonempty inputs");
  double wsum = 0.0, w2sum = 0.0;
  cplx fsum{};
  for (std::size_t i = 0; i < n; ++i) {
    wsum += weights[i];
    w2sum += weights[i] * weights[i];
    if (weights[i] != 0.0) fsum += weights[i] * values[i];
  }
  if (!(wsum > 0.0)) throw DegenerateBatch("all importance weights vanish");

  EstimatorResult r;
  r.mean = fsum / wsum;
  r.n_samples = n;
  r.effective_sample_size = wsum * wsum / w2sum;

  const std::size_t blocks = std::min<std::size_t>(32, n);
  if (blocks >= 2) {
    std::vector<cplx> loo(blocks);
    cplx avg{};
    for (std::size_t b = 0; b < blocks; ++b) {
      const std::size_t lo = b * n / blocks, hi = (b + 1) * n / blocks;
      double bw = 0.0;
      cplx bf{};
      for (std::size_t i = lo; i < hi; ++i) {
        bw += weights[i];
        if (weights[i] != 0.0) bf += weights[i] * values[i];
      }
      const double rest = wsum - bw;
      loo[b] = rest > 0.0 ? (fsum - bf) / rest : r.mean;
      avg += loo[b];
    }
    avg /= double(blocks);
    double var = 0.0;
    for (const cplx& v : loo) var += std::norm(v - avg);
    r.std_error = std::sqrt(var * double(blocks - 1) / double(blocks));
  }
  return r;
}

EstimatorResult superop_expectation(std::span<const JointSample> samples,
                                    const std::function<cplx(const JointSample&)>& f) {
  std::vector<cplx> values(samples.size());
  std::vector<double> weights(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    weights[i] = samples[i].weight;
    values[i] = samples[i].weight != 0.0 ? f(samples[i]) : cplx{};
  }
  return weighted_mean(values, weights);
}

namespace {

EstimatorResult plain_mean(std::span<const cplx> values) {
  std::vector<double> ones(values.size(), 1.0);
  return weighted_mean(values, ones);
}

}  // namespace

PurityEstimate purity_from_samples(std::span<const JointSample> samples) {
  std::vector<cplx> w(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) w[i] = samples[i].weight;
  const auto m = plain_mean(w);
  PurityEstimate r;
  r.purity = m.mean.real();
  r.purity_error = m.std_error;
  if (!(r.purity > 0.0)) throw DegenerateBatch("purity estimate is not positive");
  r.renyi2 = -std::log2(r.purity);
  r.renyi2_error = r.purity_error / (r.purity * std::log(2.0));
  return r;
}

PurityEstimate estimate_purity_renyi2(const AghdoModel& model, double alpha, std::size_t n, Rng& rng,
                                      int threads) {
  return purity_from_samples(sample_joint_alpha(model, alpha, n, rng, threads));
}

EstimatorResult estimate_observable(const AghdoModel& model, std::span<const LocalOperator> terms,
                                    std::span<const Configuration> configs, int threads) {
  std::vector<std::optional<cplx>> vals(configs.size());
  parallel_for(configs.size(), threads,
               [&](std::size_t i) { vals[i] = a_loc(model, terms, model.evaluate(configs[i])); });
  std::vector<cplx> kept;
  kept.reserve(vals.size());
  for (const auto& v : vals)
    if (v) kept.push_back(*v);
  if (kept.empty()) throw DegenerateBatch("every diagonal sample underflowed");
  auto r = plain_mean(kept);
  r.skipped = configs.size() - kept.size();
  return r;
}

void write_sample_dump(std::ostream& os, std::span<const JointSample> samples) {
  os << "sigma\teta\tweight\tlog_rho_re\tlog_rho_im\n";
  for (const auto& s : samples)
    os << config_string(s.sigma) << '\t' << config_string(s.eta) << '\t' << s.weight << '\t'
       << s.log_rho.real() << '\t' << s.log_rho.imag() << '\n';
}

}  // namespace ghdo
