#include "ghdo/io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

namespace ghdo {

using nlohmann::json;

namespace {

void split_params(std::span<const double> p, json& doc) {
  std::vector<double> re(p.size() / 2), im(p.size() / 2);
  for (std::size_t k = 0; k < re.size(); ++k) {
    re[k] = p[2 * k];
    im[k] = p[2 * k + 1];
  }
  doc["params_re"] = re;
  doc["params_im"] = im;
}

std::vector<double> join_params(const json& doc) {
  const auto re = doc.at("params_re").get<std::vector<double>>();
  const auto im = doc.at("params_im").get<std::vector<double>>();
  if (re.size() != im.size()) throw InputError("checkpoint: params_re and params_im differ in length");
  std::vector<double> p(2 * re.size());
  for (std::size_t k = 0; k < re.size(); ++k) {
    p[2 * k] = re[k];
    p[2 * k + 1] = im[k];
  }
  return p;
}

}  // namespace

void write_checkpoint(std::ostream& os, const AghdoModel& model, std::uint64_t seed) {
  json doc;
  doc["version"] = kCheckpointVersion;
  doc["seed"] = seed;
  if (const auto* net = model.network()) {
    const auto& s = net->spec();
    doc["model_kind"] = "network";
    doc["spec"] = {{"sites", s.sites},
                   {"local_rank", s.local_rank},
                   {"feature_densities", s.feature_densities},
                   {"init_width", s.init_width},
                   {"seed", s.seed}};
  } else {
    doc["model_kind"] = "table";
    doc["spec"] = {{"sites", model.sites()}, {"local_rank", model.local_rank()}};
  }
  split_params(model.parameters(), doc);
  // shortest round-trip formatting, so parameters reload bit-exactly
  os << doc.dump() << '\n';
}

void save_checkpoint(const std::filesystem::path& path, const AghdoModel& model, std::uint64_t seed) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot open " + path.string() + " for writing");
  write_checkpoint(os, model, seed);
}

Checkpoint read_checkpoint(std::istream& is) {
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::exception& e) {
    throw InputError(std::string("checkpoint: ") + e.what());
  }
  try {
    const auto version = doc.at("version").get<std::string>();
    if (version != kCheckpointVersion)
      throw InputError("checkpoint version '" + version + "' is not " + kCheckpointVersion);
    const auto kind = doc.at("model_kind").get<std::string>();
    const auto& spec = doc.at("spec");
    const auto params = join_params(doc);
    const auto seed = doc.at("seed").get<std::uint64_t>();
    if (kind == "network") {
      NetworkSpec s;
      s.sites = spec.at("sites").get<int>();
      s.local_rank = spec.at("local_rank").get<int>();
      s.feature_densities = spec.at("feature_densities").get<std::vector<int>>();
      s.init_width = spec.at("init_width").get<double>();
      s.seed = spec.at("seed").get<std::uint64_t>();
      if (params.size() != s.num_real_params()) throw InputError("checkpoint: parameter count does not match spec");
      return {AghdoModel(s, params), seed};
    }
    if (kind == "table") {
      auto amps = std::make_unique<TabulatedAmplitudes>(spec.at("sites").get<int>(), spec.at("local_rank").get<int>(),
                                                        params);
      return {AghdoModel(std::move(amps)), seed};
    }
    throw InputError("checkpoint: unknown model_kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw InputError(std::string("checkpoint: ") + e.what());
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open " + path.string());
  return read_checkpoint(is);
}

void write_matrix(std::ostream& os, const DenseMatrix& m) {
  os << "# ghdo-matrix " << m.rows() << ' ' << m.cols() << '\n' << std::setprecision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? " " : "") << m(i, j).real() << ' ' << m(i, j).imag();
    os << '\n';
  }
}

DenseMatrix read_matrix(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw InputError("matrix: empty input");
  std::istringstream head(line);
  std::string hash, tag;
  Eigen::Index rows = -1, cols = -1;
  head >> hash >> tag >> rows >> cols;
  if (hash != "#" || tag != "ghdo-matrix" || rows < 0 || cols < 0) throw InputError("matrix: bad header '" + line + "'");
  DenseMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      double re, im;
      if (!(is >> re >> im)) throw InputError("matrix: truncated data");
      m(i, j) = cplx(re, im);
    }
  return m;
}

}  // namespace ghdo
