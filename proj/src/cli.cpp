#include "ghdo/cli.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>

#include <CLI11.hpp>

#include "ghdo/io.hpp"
#include "ghdo/oracle.hpp"
#include "ghdo/parallel.hpp"
#include "ghdo/sampling.hpp"
#include "ghdo/verify.hpp"

namespace ghdo::cli {

using nlohmann::json;

namespace {

/// Typed reads from one config section; remembers which keys were used so
/// leftovers can be rejected by name.
class Section {
 public:
  Section(const json& doc, std::string name) : name_(std::move(name)) {
    if (doc.contains(name_)) {
      node_ = doc.at(name_);
      if (!node_.is_object()) throw ConfigError("section '" + name_ + "' must be an object");
    } else {
      node_ = json::object();
    }
  }

  bool has(const std::string& key) const { return node_.contains(key); }
  const json& raw(const std::string& key) {
    used_.insert(key);
    return node_.at(key);
  }
  std::string path(const std::string& key) const { return name_ + "." + key; }

  template <class T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    used_.insert(key);
    try {
      return node_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(path(key) + ": wrong type (" + node_.at(key).dump() + ")");
    }
  }

  void finish() const {
    for (const auto& [key, value] : node_.items())
      if (!used_.count(key)) throw ConfigError("unknown key '" + path(key) + "'");
  }

 private:
  std::string name_;
  json node_;
  std::set<std::string> used_;
};

template <class T>
T require_count(Section& s, const std::string& key, T fallback, T lo) {
  const json v = s.has(key) ? s.raw(key) : json(fallback);
  if (!v.is_number_integer() || v.get<long long>() < static_cast<long long>(lo))
    throw ConfigError(s.path(key) + ": expected an integer >= " + std::to_string(lo));
  return v.get<T>();
}

DenseMatrix matrix_from_json(const json& re, const json* im, const std::string& where) {
  try {
    const auto r = re.get<std::vector<std::vector<double>>>();
    std::vector<std::vector<double>> i;
    if (im) i = im->get<std::vector<std::vector<double>>>();
    DenseMatrix m(static_cast<Eigen::Index>(r.size()), r.empty() ? 0 : static_cast<Eigen::Index>(r[0].size()));
    for (std::size_t a = 0; a < r.size(); ++a) {
      if (r[a].size() != static_cast<std::size_t>(m.cols())) throw ConfigError(where + ": ragged matrix");
      for (std::size_t b = 0; b < r[a].size(); ++b)
        m(a, b) = cplx(r[a][b], im ? i.at(a).at(b) : 0.0);
    }
    return m;
  } catch (const json::exception&) {
    throw ConfigError(where + ": expected a matrix as nested lists of numbers");
  } catch (const std::out_of_range&) {
    throw ConfigError(where + ": imaginary part has the wrong shape");
  }
}

std::vector<LocalOperator> operators_from_json(const json& list, int sites, const std::string& where) {
  if (!list.is_array()) throw ConfigError(where + ": expected a list of {sites, re, im} entries");
  std::vector<LocalOperator> ops;
  for (std::size_t k = 0; k < list.size(); ++k) {
    const auto& e = list[k];
    const std::string at = where + "[" + std::to_string(k) + "]";
    if (!e.is_object()) throw ConfigError(at + ": expected an object");
    for (const auto& [key, v] : e.items())
      if (key != "sites" && key != "re" && key != "im") throw ConfigError("unknown key '" + at + "." + key + "'");
    if (!e.contains("sites") || !e.contains("re")) throw ConfigError(at + ": needs 'sites' and 're'");
    LocalOperator op;
    try {
      op.support = e.at("sites").get<std::vector<int>>();
    } catch (const json::exception&) {
      throw ConfigError(at + ".sites: expected a list of integers");
    }
    op.matrix = matrix_from_json(e.at("re"), e.contains("im") ? &e.at("im") : nullptr, at);
    try {
      op.validate(sites);
    } catch (const InputError& err) {
      throw ConfigError(at + ": " + err.what());
    }
    ops.push_back(std::move(op));
  }
  return ops;
}

json estimate_json(const EstimatorResult& r) {
  return {{"mean", r.mean.real()}, {"error", r.std_error}};
}

struct FinalEstimates {
  json magnetization = json::object();
  json purity;
  json renyi2;
};

FinalEstimates final_estimates(const AghdoModel& model, std::size_t samples, double alpha, Rng& rng, int threads,
                               std::ostream* dump) {
  FinalEstimates f;
  const auto configs = sample_diagonal(model, samples, rng, threads);
  for (char axis : {'x', 'y', 'z'}) {
    const auto r = estimate_observable(model, magnetization_terms(model.sites(), axis), configs, threads);
    f.magnetization[std::string(1, axis)] = estimate_json(r);
  }
  const auto joint = sample_joint_alpha(model, alpha, samples, rng, threads);
  if (dump) write_sample_dump(*dump, joint);
  const auto p = purity_from_samples(joint);
  f.purity = {{"mean", p.purity}, {"error", p.purity_error}};
  f.renyi2 = {{"mean", p.renyi2}, {"error", p.renyi2_error}};
  return f;
}

json dense_summary(const DenseMatrix& rho, int sites) {
  json j;
  j["x"] = dense_observable(rho, magnetization_terms(sites, 'x')).real();
  j["y"] = dense_observable(rho, magnetization_terms(sites, 'y')).real();
  j["z"] = dense_observable(rho, magnetization_terms(sites, 'z')).real();
  j["purity"] = dense_purity(rho);
  j["renyi2"] = dense_renyi2(rho);
  return j;
}

}  // namespace

LindbladModel PhysicsConfig::model(int sites, double g_value) const {
  const auto base = build_tfim(sites, V, g_value, gamma, periodic);
  auto h = base.hamiltonian_terms();
  auto l = base.jump_operators();
  h.insert(h.end(), hamiltonian.begin(), hamiltonian.end());
  l.insert(l.end(), jumps.begin(), jumps.end());
  return LindbladModel(sites, std::move(h), std::move(l));
}

RunConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
  for (const auto& [key, value] : doc.items())
    if (key != "model" && key != "physics" && key != "tdvp" && key != "output")
      throw ConfigError("unknown key '" + key + "'");
  RunConfig c;

  Section m(doc, "model");
  c.model.sites = require_count<int>(m, "sites", 2, 1);
  c.model.local_rank = require_count<int>(m, "local_rank", 2, 1);
  c.model.feature_densities = m.get<std::vector<int>>("feature_densities", {8, 4});
  c.model.init_width = m.get<double>("init_width", 0.01);
  c.model.seed = m.get<std::uint64_t>("seed", 1);
  m.finish();
  if (c.model.sites > 62) throw ConfigError("model.sites: at most 62 sites");
  for (int f : c.model.feature_densities)
    if (f < 1) throw ConfigError("model.feature_densities: entries must be >= 1");
  if (c.model.feature_densities.empty()) throw ConfigError("model.feature_densities: needs at least one layer");
  if (!(c.model.init_width > 0.0 && c.model.init_width <= 1.0))
    throw ConfigError("model.init_width: must lie in (0, 1]");

  Section p(doc, "physics");
  c.physics.V = p.get<double>("V", 2.0);
  if (p.has("g")) {
    const json& g = p.raw("g");
    if (g.is_number()) {
      c.physics.g = {g.get<double>()};
    } else if (g.is_array() && !g.empty() && std::all_of(g.begin(), g.end(), [](const json& v) { return v.is_number(); })) {
      c.physics.g = g.get<std::vector<double>>();
    } else {
      throw ConfigError("physics.g: expected a number or a nonempty list of numbers");
    }
  }
  c.physics.gamma = p.get<double>("gamma", 1.0);
  c.physics.periodic = p.get<bool>("periodic", true);
  if (p.has("hamiltonian")) c.physics.hamiltonian = operators_from_json(p.raw("hamiltonian"), c.model.sites, "physics.hamiltonian");
  if (p.has("jumps")) c.physics.jumps = operators_from_json(p.raw("jumps"), c.model.sites, "physics.jumps");
  p.finish();
  if (!(c.physics.gamma >= 0.0)) throw ConfigError("physics.gamma: must be >= 0");

  Section t(doc, "tdvp");
  c.tdvp.dt = t.get<double>("dt", 1e-2);
  c.tdvp.regularization = t.get<double>("regularization", 1e-3);
  c.tdvp.cg_tol = t.get<double>("cg_tol", 1e-6);
  c.tdvp.cg_max_iters = require_count<int>(t, "cg_max_iters", 200, 1);
  c.tdvp.samples_per_step = require_count<std::size_t>(t, "samples_per_step", 4096, 1);
  if (t.has("alpha")) {
    const json& a = t.raw("alpha");
    if (a.is_string() && a.get<std::string>() == "adaptive") {
      c.tdvp.adaptive_alpha = true;
    } else if (a.is_number()) {
      c.tdvp.alpha = a.get<double>();
    } else {
      throw ConfigError("tdvp.alpha: expected a number in [0, 1] or \"adaptive\"");
    }
  }
  c.tdvp.alpha_interval = require_count<std::size_t>(t, "alpha_interval", 50, 1);
  const auto batch = t.get<std::string>("batch", "sampled");
  if (batch == "sampled") {
    c.tdvp.batch = BatchMode::sampled;
  } else if (batch == "full") {
    c.tdvp.batch = BatchMode::full;
  } else {
    throw ConfigError("tdvp.batch: expected \"sampled\" or \"full\"");
  }
  c.tdvp.max_steps = require_count<std::size_t>(t, "max_steps", 2000, 0);
  c.tdvp.convergence_window = require_count<std::size_t>(t, "convergence_window", 200, 2);
  c.tdvp.convergence_tol = t.get<double>("convergence_tol", 1e-3);
  c.sampler_seed = t.get<std::uint64_t>("seed", 1);
  t.finish();
  c.tdvp.validate();
  if (c.tdvp.batch == BatchMode::full && c.model.sites > 7) throw ConfigError("tdvp.batch: full summation needs sites <= 7");

  Section o(doc, "output");
  c.output.directory = o.get<std::string>("directory", "ghdo_out");
  c.output.checkpoint_interval = require_count<std::size_t>(o, "checkpoint_interval", 0, 0);
  c.output.dump_samples = o.get<bool>("dump_samples", false);
  c.output.warm_start = o.get<bool>("warm_start", false);
  c.output.final_samples = require_count<std::size_t>(o, "final_samples", 16384, 1);
  o.finish();
  return c;
}

json load_config_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path.string());
  try {
    return json::parse(is, nullptr, true, true);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq || dot == 0 || dot + 1 == eq)
    throw ConfigError("override '" + assignment + "' is not of the form section.key=value");
  const std::string section = assignment.substr(0, dot);
  const std::string key = assignment.substr(dot + 1, eq - dot - 1);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::exception&) {
    value = text;
  }
  if (!doc.is_object()) doc = json::object();
  doc[section][key] = value;
}

void write_csv_row(std::ostream& os, const StepRecord& r) {
  os << r.step << ',' << std::setprecision(10) << r.time << ',' << r.lloc2 << ',' << r.mx << ',' << r.my << ','
     << r.mz << ',' << r.purity << ',' << r.cg_iterations << ',' << r.residual << ',' << r.ess << ',' << r.alpha
     << ',' << (r.ok ? 1 : 0) << '\n';
}

json cmd_run(const RunConfig& config, std::ostream& log) {
  namespace fs = std::filesystem;
  fs::create_directories(config.output.directory);
  const int n = config.model.sites;
  json points = json::array();
  std::optional<AghdoModel> previous;
  for (std::size_t k = 0; k < config.physics.g.size(); ++k) {
    const double g = config.physics.g[k];
    const auto start = std::chrono::steady_clock::now();
    const fs::path dir = config.output.directory / ("point_" + std::to_string(k));
    fs::create_directories(dir);
    const auto lind = config.physics.model(n, g);
    AghdoModel model = (config.output.warm_start && previous) ? *previous : AghdoModel(config.model);
    const std::uint64_t seed = config.sampler_seed + k;
    Rng rng(seed);

    std::ofstream csv(dir / "diagnostics.csv");
    csv << kCsvHeader << '\n';
    auto on_step = [&](const StepRecord& r, const AghdoModel& m) {
      write_csv_row(csv, r);
      if (config.output.checkpoint_interval > 0 && (r.step + 1) % config.output.checkpoint_interval == 0)
        save_checkpoint(dir / "checkpoint.json", m, seed);
      if ((r.step + 1) % 100 == 0)
        log << "g=" << g << " step " << r.step + 1 << " mz " << r.mz << " purity " << r.purity << std::endl;
    };
    const auto diag = run_to_steady_state(model, lind, config.tdvp, rng, on_step);
    csv.close();
    save_checkpoint(dir / "checkpoint.json", model, seed);

    std::ofstream dump;
    if (config.output.dump_samples) dump.open(dir / "samples.txt");
    const double alpha = diag.rows.empty() ? config.tdvp.alpha : diag.rows.back().alpha;
    const auto fin = final_estimates(model, config.output.final_samples, alpha, rng, config.tdvp.threads,
                                     config.output.dump_samples ? &dump : nullptr);

    json point;
    point["g"] = g;
    point["V"] = config.physics.V;
    point["gamma"] = config.physics.gamma;
    point["sites"] = n;
    point["steps"] = diag.rows.size();
    point["converged"] = diag.converged;
    point["magnetization"] = fin.magnetization;
    point["purity"] = fin.purity;
    point["renyi2"] = fin.renyi2;
    if (n <= 6) point["model_dense"] = dense_summary(dense_from_model(model), n);
    point["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    point["directory"] = dir.string();
    points.push_back(point);
    log << "g=" << g << " done: steps " << diag.rows.size() << (diag.converged ? " (converged)" : " (not converged)")
        << std::endl;
    previous = std::move(model);
  }
  json summary{{"schema", "ghdo-summary-1"}, {"points", points}};
  std::ofstream(config.output.directory / "summary.json") << summary.dump(2) << '\n';
  return summary;
}

json cmd_estimate(const std::filesystem::path& checkpoint, std::size_t samples, double alpha, std::uint64_t seed,
                  int threads) {
  if (samples < 1) throw ConfigError("samples must be >= 1");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  const auto ck = load_checkpoint(checkpoint);
  Rng rng(seed);
  const auto fin = final_estimates(ck.model, samples, alpha, rng, threads, nullptr);
  return {{"sites", ck.model.sites()},  {"samples", samples},       {"alpha", alpha},
          {"magnetization", fin.magnetization}, {"purity", fin.purity}, {"renyi2", fin.renyi2}};
}

json cmd_oracle(const RunConfig& config, const std::filesystem::path& matrix_dir) {
  const int n = config.model.sites;
  json points = json::array();
  if (!matrix_dir.empty()) std::filesystem::create_directories(matrix_dir);
  for (std::size_t k = 0; k < config.physics.g.size(); ++k) {
    const double g = config.physics.g[k];
    const DenseMatrix ss = steady_state_dense(config.physics.model(n, g));
    json point = dense_summary(ss, n);
    point["g"] = g;
    if (!matrix_dir.empty()) {
      const auto file = matrix_dir / ("steady_state_" + std::to_string(k) + ".txt");
      std::ofstream os(file);
      write_matrix(os, ss);
      point["matrix"] = file.string();
    }
    points.push_back(point);
  }
  return {{"sites", n}, {"V", config.physics.V}, {"gamma", config.physics.gamma}, {"points", points}};
}

int run_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Autoregressive Gram-Hadamard density operators for open spin chains"};
  app.require_subcommand(1);
  int threads = default_threads();
  app.add_option("--threads", threads, "worker threads (default: GHDO_NUM_THREADS or 1)")->check(CLI::PositiveNumber);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string output_dir;
  auto* run = app.add_subcommand("run", "evolve to the steady state for every g in the config");
  run->add_option("-c,--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  run->add_option("--set", overrides, "override as section.key=value")->allow_extra_args(false);
  run->add_option("-o,--output", output_dir, "output directory");

  std::string ckpt_path;
  std::size_t samples = 16384;
  double alpha = 0.5;
  std::uint64_t seed = 1;
  auto* est = app.add_subcommand("estimate", "observables and Renyi-2 entropy of a checkpoint");
  est->add_option("checkpoint", ckpt_path, "checkpoint file")->required()->check(CLI::ExistingFile);
  est->add_option("-n,--samples", samples, "sample count");
  est->add_option("--alpha", alpha, "mixing parameter of the joint sampler");
  est->add_option("--seed", seed, "sampler seed");

  std::string matrix_dir;
  auto* orc = app.add_subcommand("oracle", "dense steady state observables (N <= 6)");
  orc->add_option("-c,--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  orc->add_option("--set", overrides, "override as section.key=value")->allow_extra_args(false);
  orc->add_option("--matrix-dir", matrix_dir, "also write steady states in the ghdo-matrix format");

  std::vector<std::string> suites;
  std::uint64_t verify_seed = 1;
  auto* ver = app.add_subcommand("verify", "run invariant suites (or 'all')");
  ver->add_option("suites", suites, "suite names")->required();
  ver->add_option("--seed", verify_seed, "seed for the random cases");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }

  auto build_config = [&]() {
    json doc = config_path.empty() ? json::object() : load_config_file(config_path);
    for (const auto& o : overrides) apply_override(doc, o);
    if (!output_dir.empty()) doc["output"]["directory"] = output_dir;
    RunConfig c = parse_config(doc);
    c.tdvp.threads = threads;
    return c;
  };

  try {
    if (*run) {
      out << cmd_run(build_config(), err).dump(2) << '\n';
    } else if (*est) {
      out << cmd_estimate(ckpt_path, samples, alpha, seed, threads).dump(2) << '\n';
    } else if (*orc) {
      out << cmd_oracle(build_config(), matrix_dir).dump(2) << '\n';
    } else if (*ver) {
      std::vector<std::string> names;
      for (const auto& s : suites) {
        if (s == "all") {
          names.insert(names.end(), suite_names().begin(), suite_names().end());
        } else if (std::find(suite_names().begin(), suite_names().end(), s) == suite_names().end()) {
          err << "error: unknown suite '" << s << "'\n";
          return kUsageError;
        } else {
          names.push_back(s);
        }
      }
      bool all_ok = true;
      for (const auto& name : names) {
        const auto r = run_suite(name, verify_seed, threads);
        out << name << ": " << r.passed << "/" << r.total << (r.ok() ? " pass" : " FAIL") << " (worst " << r.worst
            << ")\n";
        for (const auto& f : r.failures) out << "  " << f << '\n';
        all_ok = all_ok && r.ok();
      }
      return all_ok ? 0 : 1;
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace ghdo::cli
