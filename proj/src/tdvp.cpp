#include "ghdo/tdvp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ghdo/parallel.hpp"

namespace ghdo {

void TdvpConfig::validate() const {
  if (!(dt >= 0.0) || !std::isfinite(dt)) throw ConfigError("tdvp.dt must be nonnegative");
  if (!(regularization >= 0.0)) throw ConfigError("tdvp.regularization must be >= 0");
  if (!(cg_tol > 0.0)) throw ConfigError("tdvp.cg_tol must be positive");
  if (cg_max_iters < 1) throw ConfigError("tdvp.cg_max_iters must be >= 1");
  if (samples_per_step < 1) throw ConfigError("tdvp.samples_per_step must be >= 1");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("tdvp.alpha must lie in [0, 1]");
  if (alpha_interval < 1) throw ConfigError("tdvp.alpha_interval must be >= 1");
  if (convergence_window < 2) throw ConfigError("tdvp.convergence_window must be >= 2");
  if (!(convergence_tol > 0.0)) throw ConfigError("tdvp.convergence_tol must be positive");
  if (threads < 1) throw ConfigError("thread count must be >= 1");
}

DenseMatrix CenteredBatch::S() const {
  DenseMatrix s = O.adjoint() * O;
  return hermitize(s);
}

DenseVector CenteredBatch::F() const { return O.adjoint() * L; }

CenteredBatch build_centered_batch(const AghdoModel& model, const LindbladModel& lind,
                                   std::span<const JointSample> batch, int threads,
                                   const std::vector<std::size_t>* columns) {
  if (batch.empty()) throw DegenerateBatch("empty batch");
  CenteredBatch cb;
  cb.columns = columns ? *columns : model.amplitudes().active_parameters();
  const std::size_t n = batch.size();
  const std::size_t d = cb.columns.size();
  const std::size_t full_d = model.num_params();

  cb.O.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  cb.L.resize(static_cast<Eigen::Index>(n));
  std::vector<double> w(n, 0.0);

  parallel_for(n, threads, [&](std::size_t i) {
    const JointSample& js = batch[i];
    auto row = cb.O.row(static_cast<Eigen::Index>(i));
    row.setZero();
    cb.L(i) = 0.0;
    if (!(js.weight > 0.0)) return;
    const auto ea = model.evaluate(js.sigma);
    const auto eb = model.evaluate(js.eta);
    const auto lr = model.try_log_element(ea, eb);
    if (!lr) return;
    std::vector<cplx> o(full_d);
    if (!model.log_derivatives(ea, eb, o)) return;
    const auto ll = l_loc(model, lind, ea, eb, *lr);
    if (!ll || !std::isfinite(ll->real()) || !std::isfinite(ll->imag())) return;
    for (std::size_t k = 0; k < d; ++k) row(static_cast<Eigen::Index>(k)) = o[cb.columns[k]];
    cb.L(i) = *ll;
    w[i] = js.weight;
  });

  double wsum = 0.0, w2sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    wsum += w[i];
    w2sum += w[i] * w[i];
    if (w[i] > 0.0) ++cb.used;
  }
  if (!(wsum > 0.0) || !std::isfinite(wsum)) throw DegenerateBatch("no sample in the batch carries weight");
  cb.ess = wsum * wsum / w2sum;

  Eigen::VectorXd p(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) p(i) = w[i] / wsum;

  const Eigen::Matrix<cplx, 1, Eigen::Dynamic> mean_o = (p.cast<cplx>().transpose() * cb.O).eval();
  const cplx mean_l = p.cast<cplx>().dot(cb.L);  // dot conjugates its first argument, p is real
  cb.lloc2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    cb.lloc2 += p(ii) * std::norm(cb.L(ii));
    const double sp = std::sqrt(p(ii));
    if (sp == 0.0) {
      cb.O.row(ii).setZero();
      cb.L(ii) = 0.0;
      continue;
    }
    cb.O.row(ii) = sp * (cb.O.row(ii) - mean_o);
    cb.L(ii) = sp * (cb.L(ii) - mean_l);
  }
  return cb;
}

SfEstimate estimate_S_F(const AghdoModel& model, const LindbladModel& lind, std::span<const JointSample> batch,
                        int threads) {
  std::vector<std::size_t> all(model.num_params());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const CenteredBatch cb = build_centered_batch(model, lind, batch, threads, &all);
  return {cb.S(), cb.F()};
}

namespace {

/// Conjugate gradients for a Hermitian positive-definite operator, with an
/// optional diagonal (Jacobi) preconditioner given as inverse diagonal.
template <class Vec, class Apply>
SolveResult conjugate_gradient(const Apply& apply, const Vec& b, double tol, int max_iters,
                               const Eigen::VectorXd* inv_diag = nullptr) {
  SolveResult r;
  const double bnorm = b.norm();
  Vec x = Vec::Zero(b.size());
  if (bnorm == 0.0) {
    r.dw = x.template cast<cplx>();
    return r;
  }
  auto precondition = [&](const Vec& v) -> Vec {
    if (!inv_diag) return v;
    return (inv_diag->template cast<typename Vec::Scalar>().array() * v.array()).matrix();
  };
  Vec res = b;
  Vec z = precondition(res);
  Vec p = z;
  double rz = std::real(res.dot(z));
  r.converged = false;
  for (int it = 0; it < max_iters; ++it) {
    const Vec ap = apply(p);
    const double pap = std::real(p.dot(ap));
    if (!(pap > 0.0)) break;
    const double a = rz / pap;
    x += a * p;
    res -= a * ap;
    r.iterations = it + 1;
    if (res.norm() <= tol * bnorm) {
      // the recursive residual drifts from the true one; restart from the latter
      res = b - apply(x);
      if (res.norm() <= tol * bnorm) break;
      z = precondition(res);
      rz = std::real(res.dot(z));
      p = z;
      continue;
    }
    z = precondition(res);
    const double rz_new = std::real(res.dot(z));
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  r.residual = (apply(x) - b).norm() / bnorm;
  r.converged = r.residual <= tol;
  r.dw = x.template cast<cplx>();
  return r;
}

}  // namespace

SolveResult solve_regularized(const DenseMatrix& S, const DenseVector& F, double lambda, double cg_tol,
                              int cg_max_iters) {
  if (S.rows() != S.cols() || S.rows() != F.size()) throw InputError("S and F dimensions do not match");
  if (lambda < 0.0) throw InputError("regularization must be nonnegative");
  auto apply = [&](const DenseVector& v) -> DenseVector { return S * v + lambda * v; };
  return conjugate_gradient<DenseVector>(apply, F, cg_tol, cg_max_iters);
}

SolveResult solve_real_split(const CenteredBatch& batch, double lambda, double cg_tol, int cg_max_iters) {
  const Eigen::VectorXd b = batch.F().real();
  auto apply = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    const DenseVector u = batch.O * v.cast<cplx>();
    return (batch.O.adjoint() * u).real() + lambda * v;
  };
  const Eigen::VectorXd inv_diag = (batch.O.cwiseAbs2().colwise().sum().transpose().array() + lambda).inverse();
  return conjugate_gradient<Eigen::VectorXd>(apply, b, cg_tol, cg_max_iters, &inv_diag);
}

double relative_drift(std::span<const double> series, std::size_t window) {
  if (window < 2 || series.size() < window) return std::numeric_limits<double>::infinity();
  const std::size_t half = window / 2;
  const auto tail = series.subspan(series.size() - window);
  double a = 0.0, b = 0.0;
  for (std::size_t i = 0; i < half; ++i) a += tail[i];
  for (std::size_t i = half; i < window; ++i) b += tail[i];
  a /= double(half);
  b /= double(window - half);
  const double scale = std::max(std::abs(0.5 * (a + b)), 0.1);
  return std::abs(b - a) / scale;
}

double adaptive_alpha(double purity) {
  const double p = std::clamp(purity, 0.2, 0.8);
  const double options[] = {0.2, 0.5, 0.8};
  double best = options[0];
  for (double o : options)
    if (std::abs(o - p) < std::abs(best - p)) best = o;
  return best;
}

std::array<double, 3> pauli_magnetizations(const AghdoModel& model, std::span<const Configuration> configs,
                                           std::span<const double> weights, int threads) {
  if (!weights.empty() && weights.size() != configs.size())
    throw InputError("weights and configurations differ in length");
  const int n = model.sites();
  const std::size_t m = configs.size();
  std::vector<std::array<double, 3>> vals(m);
  std::vector<double> w(m, 0.0);
  parallel_for(m, threads, [&](std::size_t k) {
    const double wk = weights.empty() ? 1.0 : weights[k];
    if (!(wk > 0.0)) return;
    const auto e = model.evaluate(configs[k]);
    const auto l0 = model.try_log_element(e, e);
    if (!l0) return;
    double x = 0.0, y = 0.0, z = 0.0;
    for (int i = 0; i < n; ++i) {
      const Spin s = configs[k][i];
      z += s;
      const auto f = model.flipped(e, i);
      const auto l1 = model.try_log_element(f, e);
      if (!l1) continue;
      const cplx r = std::exp(*l1 - *l0);
      // <sigma|X|sigma'> = 1; <down|Y|up> = i, <up|Y|down> = -i.
      x += r.real();
      y += (s < 0 ? cplx(0.0, 1.0) * r : cplx(0.0, -1.0) * r).real();
    }
    vals[k] = {x / n, y / n, z / n};
    w[k] = wk;
  });
  double wsum = 0.0;
  std::array<double, 3> acc{0.0, 0.0, 0.0};
  for (std::size_t k = 0; k < m; ++k) {
    if (w[k] == 0.0) continue;
    wsum += w[k];
    for (int a = 0; a < 3; ++a) acc[a] += w[k] * vals[k][a];
  }
  if (!(wsum > 0.0)) throw DegenerateBatch("no configuration with a finite diagonal element");
  for (double& v : acc) v /= wsum;
  return acc;
}

StepRecord step(AghdoModel& model, const LindbladModel& lind, const TdvpConfig& config, TdvpState& state,
                Rng& rng) {
  config.validate();
  StepRecord rec;
  rec.step = state.step;
  rec.time = state.time;
  rec.alpha = state.alpha;
  try {
    std::vector<JointSample> batch;
    std::vector<Configuration> diag;
    std::vector<double> diag_w;
    if (config.batch == BatchMode::full) {
      batch = full_summation_batch(model);
      const std::uint64_t dim = std::uint64_t{1} << model.sites();
      double total = 0.0;
      for (const auto& js : batch) total += js.weight;
      rec.purity = total;
      for (std::uint64_t i = 0; i < dim; ++i) {
        const auto c = index_to_config(i, model.sites());
        diag_w.push_back(model.diagonal(c));
        diag.push_back(c);
      }
    } else {
      batch = sample_joint_alpha(model, state.alpha, config.samples_per_step, rng, config.threads);
      double total = 0.0;
      for (const auto& js : batch) {
        total += js.weight;
        diag.push_back(js.sigma);
      }
      rec.purity = total / double(batch.size());
    }

    const auto m = pauli_magnetizations(model, diag, diag_w, config.threads);
    rec.mx = m[0];
    rec.my = m[1];
    rec.mz = m[2];

    const CenteredBatch cb = build_centered_batch(model, lind, batch, config.threads);
    rec.lloc2 = cb.lloc2;
    rec.ess = cb.ess;
    const SolveResult sr = solve_real_split(cb, config.regularization, config.cg_tol, config.cg_max_iters);
    rec.cg_iterations = sr.iterations;
    rec.residual = sr.residual;
    if (!sr.dw.allFinite()) throw DegenerateBatch("non-finite update direction");

    std::vector<double> w(model.parameters().begin(), model.parameters().end());
    for (std::size_t k = 0; k < cb.columns.size(); ++k)
      w[cb.columns[k]] += config.dt * sr.dw(static_cast<Eigen::Index>(k)).real();
    model.set_parameters(w);
  } catch (const DegenerateBatch& e) {
    rec.ok = false;
    rec.error = e.what();
  } catch (const DegenerateAmplitude& e) {
    rec.ok = false;
    rec.error = e.what();
  }
  ++state.step;
  state.time += config.dt;
  return rec;
}

TdvpDiagnostics run_to_steady_state(AghdoModel& model, const LindbladModel& lind, const TdvpConfig& config,
                                    Rng& rng, const StepCallback& on_step) {
  config.validate();
  if (lind.sites() != model.sites()) throw InputError("model and Lindbladian differ in size");
  TdvpDiagnostics diag;
  TdvpState state;
  state.alpha = config.alpha;
  std::vector<double> xs, zs, ps;
  for (std::size_t s = 0; s < config.max_steps; ++s) {
    StepRecord rec = step(model, lind, config, state, rng);
    if (on_step) on_step(rec, model);
    if (rec.ok) {
      xs.push_back(rec.mx);
      zs.push_back(rec.mz);
      ps.push_back(rec.purity);
    }
    const bool snap = config.adaptive_alpha && rec.ok && config.batch == BatchMode::sampled &&
                      state.step % config.alpha_interval == 0;
    if (snap) state.alpha = adaptive_alpha(rec.purity);
    diag.rows.push_back(std::move(rec));
    const std::size_t win = config.convergence_window;
    if (xs.size() >= win && relative_drift(xs, win) <= config.convergence_tol &&
        relative_drift(zs, win) <= config.convergence_tol && relative_drift(ps, win) <= config.convergence_tol) {
      diag.converged = true;
      break;
    }
  }
  return diag;
}

}  // namespace ghdo
