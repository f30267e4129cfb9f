#pragma once

#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

#include "ghdo/aghdo.hpp"
#include "ghdo/lindblad.hpp"
#include "ghdo/types.hpp"

namespace ghdo {

using Rng = std::mt19937_64;

/// Conditionals below this are raised to it (then renormalized) before
/// sampling and before taking logarithms.
inline constexpr double kConditionalFloor = 1e-12;

struct JointSample {
  Configuration sigma;
  Configuration eta;
  double log_p_alpha = 0.0;
  cplx log_rho{};
  /// |rho(sigma, eta)|^2 / p_alpha(sigma, eta); zero when rho underflows.
  double weight = 0.0;
};

struct EstimatorResult {
  cplx mean{};
  double std_error = 0.0;
  std::size_t n_samples = 0;
  double effective_sample_size = 0.0;
  std::size_t skipped = 0;
};

/// Independent draws from p(sigma) = prod_h p(sigma_h | sigma_<h).
std::vector<Configuration> sample_diagonal(const AghdoModel& model, std::size_t n, Rng& rng,
                                           int threads = 1);

/// Draws (sigma, eta) from
///   p_alpha = p(sigma) prod_h [alpha p(eta_h | eta_<h) + (1 - alpha) delta(sigma_h, eta_h)]
/// by first sampling sigma, then for every site a coin with P(heads) = alpha
/// choosing between the model conditional and copying sigma_h.
std::vector<JointSample> sample_joint_alpha(const AghdoModel& model, double alpha, std::size_t n,
                                            Rng& rng, int threads = 1);

/// Exact log p_alpha(sigma, eta) without flooring; -inf outside the support.
double log_p_alpha(const AghdoModel& model, double alpha, std::span<const Spin> sigma,
                   std::span<const Spin> eta);

/// Every pair (sigma, eta) with weight |rho(sigma, eta)|^2 (N <= 7).
std::vector<JointSample> full_summation_batch(const AghdoModel& model);

/// Self-normalized importance-sampling mean of f with a jackknife error.
EstimatorResult weighted_mean(std::span<const cplx> values, std::span<const double> weights);
EstimatorResult superop_expectation(std::span<const JointSample> samples,
                                    const std::function<cplx(const JointSample&)>& f);

struct PurityEstimate {
  double purity = 0.0;
  double purity_error = 0.0;
  double renyi2 = 0.0;
  double renyi2_error = 0.0;
};

/// Tr rho^2 as the plain mean of the importance weights (valid because
/// Tr rho = 1), and S_2 = -log2 Tr rho^2.
PurityEstimate purity_from_samples(std::span<const JointSample> samples);
PurityEstimate estimate_purity_renyi2(const AghdoModel& model, double alpha, std::size_t n, Rng& rng,
                                      int threads = 1);

/// Mean of A_loc over diagonal samples; samples whose diagonal underflows
/// are skipped and counted.
EstimatorResult estimate_observable(const AghdoModel& model, std::span<const LocalOperator> terms,
                                    std::span<const Configuration> configs, int threads = 1);

/// One line per sample: sigma eta weight Re(log rho) Im(log rho), with
/// configurations written as strings of '+' and '-'.
void write_sample_dump(std::ostream& os, std::span<const JointSample> samples);
std::string config_string(std::span<const Spin> s);

}  // namespace ghdo
