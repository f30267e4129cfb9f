#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ghdo/aghdo.hpp"
#include "ghdo/dense.hpp"
#include "ghdo/lindblad.hpp"
#include "ghdo/sampling.hpp"

namespace ghdo {

enum class BatchMode { sampled, full };

struct TdvpConfig {
  double dt = 1e-2;
  double regularization = 1e-3;
  double cg_tol = 1e-6;
  int cg_max_iters = 200;
  std::size_t samples_per_step = 4096;
  double alpha = 0.5;
  /// Snap alpha to {0.2, 0.5, 0.8} from the purity every `alpha_interval` steps.
  bool adaptive_alpha = false;
  std::size_t alpha_interval = 50;
  BatchMode batch = BatchMode::sampled;
  std::size_t max_steps = 2000;
  std::size_t convergence_window = 200;
  double convergence_tol = 1e-3;
  int threads = 1;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

struct StepRecord {
  std::size_t step = 0;
  double time = 0.0;
  double lloc2 = 0.0;  // weighted mean of |L_loc|^2
  double mx = 0.0, my = 0.0, mz = 0.0;
  double purity = 0.0;
  int cg_iterations = 0;
  double residual = 0.0;
  double ess = 0.0;
  double alpha = 0.0;
  bool ok = true;
  std::string error;
};

struct TdvpDiagnostics {
  std::vector<StepRecord> rows;
  bool converged = false;
};

/// Centered, weight-scaled log-derivative rows and local Liouvillian
/// values of a batch: row i is sqrt(p_i) (O_i - <O>), with p the
/// self-normalized weights. Columns are restricted to `columns`.
struct CenteredBatch {
  Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> O;
  DenseVector L;
  std::vector<std::size_t> columns;
  double lloc2 = 0.0;
  double ess = 0.0;
  std::size_t used = 0;

  /// S_ij = <O_i* O_j> - <O_i*><O_j>
  DenseMatrix S() const;
  /// F_i = <O_i* L_loc> - <O_i*><L_loc>
  DenseVector F() const;
};

/// Throws DegenerateBatch when no sample carries weight.
CenteredBatch build_centered_batch(const AghdoModel& model, const LindbladModel& lind,
                                   std::span<const JointSample> batch, int threads = 1,
                                   const std::vector<std::size_t>* columns = nullptr);

struct SfEstimate {
  DenseMatrix S;
  DenseVector F;
};

/// Dense S (Hermitian) and F over all real parameters.
SfEstimate estimate_S_F(const AghdoModel& model, const LindbladModel& lind,
                        std::span<const JointSample> batch, int threads = 1);

struct SolveResult {
  DenseVector dw;
  int iterations = 0;
  double residual = 0.0;
  bool converged = true;
};

/// (S + lambda I) dw = F by conjugate gradients.
SolveResult solve_regularized(const DenseMatrix& S, const DenseVector& F, double lambda, double cg_tol,
                              int cg_max_iters);

/// Real-parameter update direction: solves (Re S + lambda I) dw = Re F
/// matrix-free on the centered batch. The result has one entry per column.
SolveResult solve_real_split(const CenteredBatch& batch, double lambda, double cg_tol, int cg_max_iters);

/// Mutable integration state carried between steps.
struct TdvpState {
  std::size_t step = 0;
  double time = 0.0;
  double alpha = 0.5;
};

/// One explicit Euler step. A failed step leaves the parameters untouched and
/// returns a record with ok = false.
StepRecord step(AghdoModel& model, const LindbladModel& lind, const TdvpConfig& config, TdvpState& state,
                Rng& rng);

/// Relative drift of a series over its trailing `window` entries: the
/// difference of the two half-window means over max(|mean|, 0.1).
double relative_drift(std::span<const double> series, std::size_t window);

/// Snaps a purity estimate to the nearest of {0.2, 0.5, 0.8} after clamping.
double adaptive_alpha(double purity);

/// Site-averaged <X>, <Y>, <Z> as means of A_loc over configurations with
/// the given weights (uniform when `weights` is empty).
std::array<double, 3> pauli_magnetizations(const AghdoModel& model, std::span<const Configuration> configs,
                                           std::span<const double> weights = {}, int threads = 1);

using StepCallback = std::function<void(const StepRecord&, const AghdoModel&)>;

/// Steps until max_steps or until <X>, <Z> and the purity all drift by at
/// most convergence_tol over the trailing window of successful steps.
TdvpDiagnostics run_to_steady_state(AghdoModel& model, const LindbladModel& lind, const TdvpConfig& config,
                                    Rng& rng, const StepCallback& on_step = {});

}  // namespace ghdo
