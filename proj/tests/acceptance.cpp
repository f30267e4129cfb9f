// Acceptance run: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (0 when all pass).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>

#include "ghdo/gram_hadamard.hpp"
#include "ghdo/oracle.hpp"
#include "ghdo/parallel.hpp"
#include "ghdo/sampling.hpp"
#include "ghdo/tdvp.hpp"
#include "test_util.hpp"

using namespace ghdo;
using namespace ghdo::testing;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

NetworkSpec network_spec(int n, int rank, std::vector<int> features, double width, std::uint64_t seed) {
  NetworkSpec s;
  s.sites = n;
  s.local_rank = rank;
  s.feature_densities = std::move(features);
  s.init_width = width;
  s.seed = seed;
  return s;
}

Outcome structural_positivity() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> logw(std::log(1e-3), std::log(1e-1));
  const int ranks[] = {1, 2, 4};
  double herm = 0.0, trace = 0.0, eig = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int n = 1 + int(rng() % 4);
    const AghdoModel m(network_spec(n, ranks[t % 3], {4, 3}, std::exp(logw(rng)), rng()));
    const DenseMatrix rho = dense_from_model(m);
    herm = std::max(herm, (rho - rho.adjoint()).cwiseAbs().maxCoeff());
    trace = std::max(trace, std::abs(rho.trace() - 1.0));
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(hermitize(rho), Eigen::EigenvaluesOnly);
    eig = std::min(eig, es.eigenvalues()(0));
  }
  const double secs = seconds_since(t0);
  return {herm <= 1e-10 && trace <= 1e-10 && eig >= -1e-10 && secs < 60.0,
          fmt("max herm err %.2e", herm) + fmt(", max |tr-1| %.2e", trace) + fmt(", min eig %.2e", eig) +
              fmt(", %.1fs", secs)};
}

Outcome exact_representations() {
  std::mt19937_64 rng(202);
  double classical = 0.0, dense = 0.0, mixed = 0.0;
  for (int t = 0; t < 50; ++t) {
    const int n = 1 + t % 4;
    const auto p = random_distribution(n, rng);
    DenseMatrix expect = DenseMatrix::Zero(p.size(), p.size());
    for (std::size_t i = 0; i < p.size(); ++i) expect(i, i) = p[i];
    classical = std::max(classical, max_abs(dense_from_model(from_classical(p)) - expect));
  }
  for (int t = 0; t < 20; ++t) {
    const int dim = t % 2 ? 8 : 4;
    const DenseMatrix rho = random_density(dim, 1 + int(rng() % dim), rng);
    dense = std::max(dense, max_abs(dense_from_model(from_dense(rho)) - rho));
  }
  for (int n = 1; n <= 6; ++n) {
    const int dim = 1 << n;
    // independent of the factor construction: every element is delta(sigma, eta) / 2^N
    const auto mm = maximally_mixed(n);
    for (const auto& s : all_configs(n))
      for (const auto& e : all_configs(n))
        mixed = std::max(mixed, std::abs(mm.element(s, e) - (s == e ? 1.0 / dim : 0.0)));
  }
  return {classical <= 1e-12 && dense <= 1e-10 && mixed <= 1e-14,
          fmt("from_classical %.2e", classical) + fmt(", from_dense %.2e", dense) + fmt(", maximally_mixed %.2e", mixed)};
}

Outcome schur_suite() {
  std::mt19937_64 rng(303);
  double worst_pair = 0.0;
  for (int t = 0; t < 500; ++t) {
    const int n = 1 + int(rng() % 8);
    const DenseMatrix a = random_density(n, 1 + int(rng() % n), rng);
    const DenseMatrix b = random_density(n, 1 + int(rng() % n), rng);
    const DenseMatrix h = a.cwiseProduct(b);
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(hermitize(h), Eigen::EigenvaluesOnly);
    worst_pair = std::min(worst_pair, es.eigenvalues()(0));
  }
  double worst_series = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int n = 1 + int(rng() % 8);
    DenseMatrix a = hermitize(random_density(n, 1 + int(rng() % n), rng));
    a /= a.cwiseAbs().maxCoeff();
    // truncated exp applied entrywise: sum_l A^{(l)} / l!, A^{(l)} the l-fold Hadamard power
    DenseMatrix power = DenseMatrix::Ones(n, n), acc = DenseMatrix::Zero(n, n);
    double fact = 1.0;
    for (int l = 0; l <= 30; ++l) {
      acc += power / fact;
      power = power.cwiseProduct(a);
      fact *= l + 1;
    }
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(hermitize(acc), Eigen::EigenvaluesOnly);
    worst_series = std::min(worst_series, es.eigenvalues()(0));
  }
  return {worst_pair >= -1e-10 && worst_series >= -1e-9,
          fmt("hadamard min eig %.2e", worst_pair) + fmt(", exp series min eig %.2e", worst_series)};
}

double tv_distance(const std::vector<double>& exact, const std::vector<std::size_t>& counts, std::size_t n) {
  double tv = 0.0;
  for (std::size_t k = 0; k < exact.size(); ++k) tv += std::abs(double(counts[k]) / double(n) - exact[k]);
  return 0.5 * tv;
}

Outcome sampler_correctness(int threads) {
  const auto t0 = Clock::now();
  const std::size_t n_samples = 100000;
  Rng rng(404);
  double tv_diag = 0.0, tv_joint = 0.0, excess = -1.0;
  for (int n = 1; n <= 3; ++n) {
    const AghdoModel m(network_spec(n, 2, {4, 3}, 0.5, 40 + n));
    const auto configs = all_configs(n);
    // exact p(sigma) as the diagonal of the dense reconstruction
    const DenseMatrix rho = dense_from_model(m);
    std::vector<double> exact(configs.size());
    for (std::size_t i = 0; i < configs.size(); ++i) exact[i] = rho(i, i).real();
    std::vector<std::size_t> counts(configs.size(), 0);
    for (const auto& c : sample_diagonal(m, n_samples, rng, threads)) ++counts[config_to_index(c)];
    tv_diag = std::max(tv_diag, tv_distance(exact, counts, n_samples));
  }
  const int n = 2;
  const AghdoModel m(network_spec(n, 2, {4, 3}, 0.5, 47));
  const DenseMatrix rho = dense_from_model(m);
  for (double alpha : {0.0, 0.5, 1.0}) {
    // p_alpha from dense conditionals: p(sigma) prod_h [alpha p(eta_h | eta_<h) + (1 - alpha) delta]
    std::vector<double> exact(16, 0.0);
    for (std::uint64_t s = 0; s < 4; ++s)
      for (std::uint64_t e = 0; e < 4; ++e) {
        const Eigen::Index first = e & 2;  // basis index of (eta_0, -1)
        const double p_eta0 = rho(first, first).real() + rho(first + 1, first + 1).real();
        const double p_eta1 = rho(e, e).real() / p_eta0;
        const double q0 = alpha * p_eta0 + (1 - alpha) * ((s & 2) == (e & 2));
        const double q1 = alpha * p_eta1 + (1 - alpha) * ((s & 1) == (e & 1));
        exact[s * 4 + e] = rho(s, s).real() * q0 * q1;
      }
    std::vector<std::size_t> counts(16, 0);
    const double bound = std::pow(alpha, -n) * (1.0 + 1e-9);
    for (const auto& js : sample_joint_alpha(m, alpha, n_samples, rng, threads)) {
      ++counts[config_to_index(js.sigma) * 4 + config_to_index(js.eta)];
      excess = std::max(excess, js.weight - bound);
    }
    tv_joint = std::max(tv_joint, tv_distance(exact, counts, n_samples));
  }
  const double secs = seconds_since(t0);
  return {tv_diag <= 0.01 && tv_joint <= 0.01 && excess <= 0.0 && secs < 120.0,
          fmt("TV diagonal %.4f", tv_diag) + fmt(", TV joint %.4f", tv_joint) +
              (excess <= 0.0 ? ", weights within bound" : fmt(", weight bound exceeded by %.2e", excess)) +
              fmt(", %.1fs", secs)};
}

Outcome gradient_check() {
  std::mt19937_64 rng(505);
  const double eps = 1e-5;
  double worst = 0.0;
  int accepted = 0, redrawn = 0;
  for (int t = 0; accepted < 20; ++t) {
    const int n = 1 + t % 4;
    const AghdoModel m(network_spec(n, 1 + t % 3, {4, 3}, 0.5, rng()));
    const auto s = index_to_config(rng() % (1u << n), n), e = index_to_config(rng() % (1u << n), n);
    const auto o = m.log_derivatives(s, e);
    const std::vector<double> p(m.parameters().begin(), m.parameters().end());
    AghdoModel work = m;
    auto rho_at = [&](std::size_t k, double d) {
      auto q = p;
      q[k] += d;
      work.set_parameters(q);
      return work.element(s, e);
    };
    // log of the element ratio avoids branch cuts of the complex log
    const cplx r0 = m.element(s, e);
    double diff = 0.0, scale = 0.0, jump = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      const cplx up = rho_at(k, eps), down = rho_at(k, -eps);
      const cplx fd = std::log(up / down) / (2 * eps);
      // one-sided quotients agree to O(eps f'') unless a SELU kink sits inside the stencil
      jump = std::max(jump, std::abs(std::log(up / r0) - std::log(r0 / down)) / eps);
      diff = std::max(diff, std::abs(o[k] - fd));
      scale = std::max(scale, std::abs(fd));
    }
    if (jump > 1e-2 * scale) {
      ++redrawn;
      continue;
    }
    ++accepted;
    worst = std::max(worst, diff / scale);
  }
  return {worst <= 1e-6 && redrawn <= 5,
          fmt("max relative error %.2e over 20 triples", worst) + fmt(", %.0f redrawn for a kink in the stencil", redrawn)};
}

Outcome tdvp_fixed_point() {
  double worst = 0.0;
  for (double g : {0.5, 1.0, 2.0, 3.0}) {
    const auto lind = build_tfim(2, 2.0, g, 1.0, true);
    const auto m = from_dense(steady_state_dense(lind));
    const auto sf = estimate_S_F(m, lind, full_summation_batch(m));
    worst = std::max(worst, sf.F.cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-6, fmt("max |F| %.2e over g in {0.5, 1, 2, 3}", worst)};
}

double exact_axis(const AghdoModel& m, char axis) {
  return dense_observable(dense_from_model(m), magnetization_terms(m.sites(), axis)).real();
}

Outcome single_qubit(int threads) {
  const auto t0 = Clock::now();
  const auto lind = build_tfim(1, 0.0, 1.0, 1.0, false);
  AghdoModel m(network_spec(1, 2, {4}, 0.01, 1));
  TdvpConfig c;
  c.dt = 0.02;
  c.samples_per_step = 1024;
  c.max_steps = 1000;
  c.threads = threads;
  Rng rng(5);
  const auto diag = run_to_steady_state(m, lind, c, rng);
  const double z = exact_axis(m, 'z'), x = exact_axis(m, 'x');
  const double secs = seconds_since(t0);
  return {std::abs(z + 1.0 / 3.0) <= 0.01 && std::abs(x) <= 0.01 && secs < 60.0,
          fmt("<Z> %.4f (exact -1/3)", z) + fmt(", <X> %.4f", x) + ", " + std::to_string(diag.rows.size()) + " steps" +
              fmt(", %.1fs", secs)};
}

Outcome small_chain(int threads) {
  Outcome out;
  for (double g : {0.5, 2.0, 3.0}) {
    const auto t0 = Clock::now();
    const auto lind = build_tfim(6, 2.0, g, 1.0, true);
    const DenseMatrix ss = steady_state_dense(lind);
    AghdoModel m(network_spec(6, 8, {8, 4}, 0.01, 1));
    TdvpConfig c;
    c.dt = 0.03;
    c.regularization = 1e-3;
    c.samples_per_step = 1024;
    c.adaptive_alpha = true;
    c.cg_max_iters = 100;
    c.cg_tol = 1e-5;
    c.max_steps = 500;
    c.threads = threads;
    Rng rng(7);
    run_to_steady_state(m, lind, c, rng);
    const DenseMatrix rho = dense_from_model(m);
    double worst_m = 0.0;
    for (char axis : {'x', 'y', 'z'}) {
      const auto terms = magnetization_terms(6, axis);
      worst_m = std::max(worst_m, std::abs(dense_observable(rho, terms).real() - dense_observable(ss, terms).real()));
    }
    const double ds2 = std::abs(dense_renyi2(rho) - dense_renyi2(ss));
    const double secs = seconds_since(t0);
    const bool ok = worst_m <= 0.02 && ds2 <= 0.05 && secs <= 900.0;
    out.pass = out.pass && ok;
    out.detail += (out.detail.empty() ? "" : "; ") + fmt("g=%.1f", g) + fmt(": max |dm| %.4f", worst_m) +
                  fmt(", |dS2| %.4f", ds2) + fmt(", %.0fs", secs) + (ok ? "" : " (miss)");
  }
  return out;
}

Outcome purity_consistency(int threads) {
  Rng rng(909);
  int within = 0;
  double worst_z = 0.0;
  for (int t = 0; t < 20; ++t) {
    const AghdoModel m(network_spec(3, 1 + t % 4, {4, 3}, 0.5, 900 + t));
    const DenseMatrix rho = dense_from_model(m);
    const double exact = (rho.adjoint() * rho).trace().real();
    const auto est = estimate_purity_renyi2(m, 0.5, 20000, rng, threads);
    const double z = std::abs(est.purity - exact) / est.purity_error;
    worst_z = std::max(worst_z, z);
    if (z <= 3.0) ++within;
  }
  const auto pure = estimate_purity_renyi2(AghdoModel(network_spec(3, 1, {4, 3}, 0.5, 3)), 0.5, 20000, rng, threads);
  const auto mixed = estimate_purity_renyi2(from_classical(std::vector<double>(8, 0.125)), 0.0, 20000, rng, threads);
  const bool pure_ok = std::abs(pure.renyi2) <= std::max(3 * pure.renyi2_error, 1e-12);
  const bool mixed_ok = std::abs(mixed.renyi2 - 3.0) <= 1e-12;
  return {within == 20 && pure_ok && mixed_ok,
          std::to_string(within) + "/20 within 3 SE" + fmt(" (worst %.2f SE)", worst_z) +
              fmt(", pure S2 %.2e", pure.renyi2) + fmt(", maximally mixed S2 %.6f (N=3)", mixed.renyi2)};
}

}  // namespace

int main() {
  const int threads = default_threads();
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"structural positivity", structural_positivity},
      {"exact representations", exact_representations},
      {"Schur and series suites", schur_suite},
      {"sampler correctness", [&] { return sampler_correctness(threads); }},
      {"gradient check", gradient_check},
      {"TDVP fixed point", tdvp_fixed_point},
      {"single-qubit steady state", [&] { return single_qubit(threads); }},
      {"N=6 chain benchmark", [&] { return small_chain(threads); }},
      {"purity consistency", [&] { return purity_consistency(threads); }},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("SKIP 10 N=16 qualitative run: optional, not part of the automated suite\n");
  return failed;
}
