#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "decsaddle/runner.hpp"

namespace decsaddle {

namespace {

using nlohmann::json;

// A JSON object plus its key path; tracks which keys were read so leftovers
// can be reported as unknown.
class Section {
 public:
  Section(const json& node, std::string path) : node_(&node), path_(std::move(path)) {
    if (!node.is_object()) fail("expected an object");
  }

  [[nodiscard]] bool has(const std::string& key) const { return node_->contains(key); }

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError((path_.empty() ? std::string("<root>") : path_) + ": " + what);
  }

  [[noreturn]] void fail_key(const std::string& key, const std::string& what) const {
    throw ConfigError(child_path(key) + ": " + what);
  }

  [[nodiscard]] std::string child_path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    if (!has(key)) fail_key(key, "missing required key");
    return node_->at(key);
  }

  Section section(const std::string& key) { return Section(raw(key), child_path(key)); }

  std::string string(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_string()) fail_key(key, "expected a string");
    return v.get<std::string>();
  }

  std::string string_or(const std::string& key, const std::string& fallback) {
    return has(key) ? string(key) : (seen_.insert(key), fallback);
  }

  double number(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_number()) fail_key(key, "expected a number");
    return v.get<double>();
  }

  double number_or(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  std::int64_t integer(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_number_integer()) fail_key(key, "expected an integer");
    return v.get<std::int64_t>();
  }

  std::int64_t integer_or(const std::string& key, std::int64_t fallback) { return has(key) ? integer(key) : fallback; }

  std::uint64_t unsigned_integer(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      fail_key(key, "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  bool boolean_or(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const auto& v = raw(key);
    if (!v.is_boolean()) fail_key(key, "expected true or false");
    return v.get<bool>();
  }

  void finish() const {
    for (const auto& item : node_->items()) {
      if (!seen_.count(item.key())) fail_key(item.key(), "unknown key");
    }
  }

 private:
  const json* node_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string resolve_path(const std::string& path, const std::string& base_dir) {
  if (path.empty()) return path;
  const std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (std::filesystem::path(base_dir) / p).lexically_normal().string();
}

Index positive_index(Section& s, const std::string& key) {
  const auto v = s.integer(key);
  if (v < 1) s.fail_key(key, "must be at least 1");
  return static_cast<Index>(v);
}

double positive(Section& s, const std::string& key, double fallback) {
  const double v = s.number_or(key, fallback);
  if (!(v > 0)) s.fail_key(key, "must be positive");
  return v;
}

}  // namespace

Index TopologyConfig::nodes() const {
  if (kind == "ring") return m;
  if (kind == "torus") return rows * cols;
  return 1;
}

RunConfig parse_config(const json& doc, const std::string& base_dir) {
  RunConfig cfg;
  Section root(doc, "");

  const auto algorithm = root.string("algorithm");
  if (algorithm == "crdpsg") {
    cfg.algorithm = Algorithm::kCrdpsg;
  } else if (algorithm == "cdpsvrg") {
    cfg.algorithm = Algorithm::kCdpsvrg;
  } else if (algorithm == "reference") {
    cfg.algorithm = Algorithm::kReference;
  } else {
    root.fail_key("algorithm", "expected crdpsg, cdpsvrg or reference, got '" + algorithm + "'");
  }
  cfg.seed = root.has("seed") ? root.unsigned_integer("seed") : 0;

  {
    auto s = root.section("topology");
    cfg.topology.kind = s.string("kind");
    if (cfg.topology.kind == "ring") {
      cfg.topology.m = positive_index(s, "m");
    } else if (cfg.topology.kind == "torus") {
      cfg.topology.rows = positive_index(s, "rows");
      cfg.topology.cols = positive_index(s, "cols");
    } else if (cfg.topology.kind != "single") {
      s.fail_key("kind", "expected ring, torus or single");
    }
    s.finish();
  }

  {
    auto s = root.section("dataset");
    cfg.dataset.kind = s.string("kind");
    if (cfg.dataset.kind == "synthetic") {
      cfg.dataset.N = positive_index(s, "N");
      cfg.dataset.d = positive_index(s, "d");
      cfg.dataset.seed = s.has("seed") ? s.unsigned_integer("seed") : 0;
    } else if (cfg.dataset.kind == "libsvm") {
      cfg.dataset.path = resolve_path(s.string("path"), base_dir);
    } else {
      s.fail_key("kind", "expected synthetic or libsvm");
    }
    s.finish();
  }

  {
    auto s = root.section("partition");
    cfg.partition.m = s.has("m") ? positive_index(s, "m") : cfg.topology.nodes();
    cfg.partition.n = positive_index(s, "n");
    const auto mode = s.string_or("mode", "shuffled");
    if (mode == "shuffled") {
      cfg.partition.mode = PartitionMode::kShuffled;
    } else if (mode == "sorted") {
      cfg.partition.mode = PartitionMode::kSortedByLabel;
    } else {
      s.fail_key("mode", "expected shuffled or sorted");
    }
    if (cfg.partition.m != cfg.topology.nodes()) {
      s.fail_key("m", "partition has " + std::to_string(cfg.partition.m) + " nodes but the topology has " +
                          std::to_string(cfg.topology.nodes()));
    }
    s.finish();
  }

  if (root.has("problem")) {
    auto s = root.section("problem");
    cfg.problem.lambda = positive(s, "lambda", cfg.problem.lambda);
    cfg.problem.beta = positive(s, "beta", cfg.problem.beta);
    cfg.problem.R_x = positive(s, "R_x", cfg.problem.R_x);
    cfg.problem.R_y = positive(s, "R_y", cfg.problem.R_y);
    s.finish();
  }

  if (root.has("compression")) {
    auto s = root.section("compression");
    const auto kind = s.string("kind");
    if (kind == "identity") {
      cfg.compression.identity = true;
    } else if (kind == "qinf") {
      cfg.compression.identity = false;
      const auto bits = s.integer("bits");
      if (bits < 1 || bits > 52) s.fail_key("bits", "must lie in [1, 52]");
      cfg.compression.bits = static_cast<int>(bits);
      if (s.has("delta")) {
        const auto& d = s.raw("delta");
        if (d.is_string() && d.get<std::string>() == "auto") {
          cfg.compression.delta.reset();
        } else if (d.is_number()) {
          cfg.compression.delta = d.get<double>();
        } else {
          s.fail_key("delta", "expected \"auto\" or a number");
        }
      }
      cfg.compression.delta_trials = static_cast<int>(s.integer_or("delta_trials", 10000));
      if (cfg.compression.delta_trials < 1000) s.fail_key("delta_trials", "must be at least 1000");
    } else {
      s.fail_key("kind", "expected identity or qinf");
    }
    s.finish();
  }

  if (root.has("oracle")) {
    auto s = root.section("oracle");
    if (s.has("p")) {
      const auto& p = s.raw("p");
      if (p.is_string()) {
        cfg.oracle.p_rule = p.get<std::string>();
        if (cfg.oracle.p_rule != "1/n" && cfg.oracle.p_rule != "1/kappa_f") {
          s.fail_key("p", "expected a number, \"1/n\" or \"1/kappa_f\"");
        }
      } else if (p.is_number()) {
        cfg.oracle.p_rule = "value";
        cfg.oracle.p = p.get<double>();
        if (!(cfg.oracle.p > 0 && cfg.oracle.p <= 1)) s.fail_key("p", "must lie in (0, 1]");
      } else {
        s.fail_key("p", "expected a number or a rule");
      }
    }
    if (s.has("distribution")) {
      const auto& d = s.raw("distribution");
      if (d.is_string()) {
        if (d.get<std::string>() != "uniform") s.fail_key("distribution", "expected \"uniform\" or per-node weights");
      } else if (d.is_array()) {
        for (const auto& row : d) {
          if (!row.is_array()) s.fail_key("distribution", "expected one array of probabilities per node");
          std::vector<double> probs;
          for (const auto& q : row) {
            if (!q.is_number()) s.fail_key("distribution", "probabilities must be numbers");
            probs.push_back(q.get<double>());
          }
          cfg.oracle.distribution.push_back(std::move(probs));
        }
      } else {
        s.fail_key("distribution", "expected \"uniform\" or per-node weights");
      }
    }
    s.finish();
  }

  {
    auto s = root.section("budget");
    if (s.has("iterations")) cfg.budget.iterations = positive_index(s, "iterations");
    if (s.has("stages")) cfg.budget.stages = static_cast<int>(positive_index(s, "stages"));
    if (s.has("stage_iterations")) {
      const auto t = s.integer("stage_iterations");
      if (t < 0) s.fail_key("stage_iterations", "must be non-negative");
      cfg.budget.stage_iterations = t;
    }
    if (cfg.algorithm == Algorithm::kCrdpsg && cfg.budget.stages < 1) s.fail_key("stages", "crdpsg needs stages >= 1");
    if (cfg.algorithm == Algorithm::kCdpsvrg && cfg.budget.iterations < 1) {
      s.fail_key("iterations", "cdpsvrg needs iterations >= 1");
    }
    s.finish();
  }

  if (root.has("log")) {
    auto s = root.section("log");
    cfg.log.stride = s.integer_or("stride", 0);
    if (cfg.log.stride < 0) s.fail_key("stride", "must be non-negative");
    cfg.log.output = resolve_path(s.string_or("output", ""), base_dir);
    cfg.log.phi = s.boolean_or("phi", false);
    s.finish();
  }
  if (cfg.algorithm != Algorithm::kReference && cfg.log.output.empty()) {
    throw ConfigError("log.output: missing required key");
  }

  if (root.has("reference")) {
    auto s = root.section("reference");
    cfg.reference.mode = s.string_or("mode", "compute");
    if (cfg.reference.mode != "compute" && cfg.reference.mode != "load") s.fail_key("mode", "expected compute or load");
    cfg.reference.path = resolve_path(s.string_or("path", ""), base_dir);
    if (s.has("iterations")) cfg.reference.iterations = positive_index(s, "iterations");
    cfg.reference.tolerance = positive(s, "tolerance", cfg.reference.tolerance);
    s.finish();
  }
  if (cfg.reference.mode == "load" && cfg.reference.path.empty()) throw ConfigError("reference.path: needed to load");
  if (cfg.algorithm == Algorithm::kReference && cfg.reference.path.empty()) {
    throw ConfigError("reference.path: needed to store the saddle point");
  }

  if (root.has("init")) {
    auto s = root.section("init");
    cfg.init.kind = s.string_or("kind", "zero");
    if (cfg.init.kind != "zero" && cfg.init.kind != "gaussian") s.fail_key("kind", "expected zero or gaussian");
    cfg.init.scale = positive(s, "scale", 1.0);
    s.finish();
  }

  if (root.has("constants")) {
    auto s = root.section("constants");
    SaddleConstants<double> c;
    c.mu_x = s.number("mu_x");
    c.mu_y = s.number("mu_y");
    c.L_xx = s.number("L_xx");
    c.L_yy = s.number("L_yy");
    c.L_xy = s.number("L_xy");
    c.L_yx = s.number("L_yx");
    s.finish();
    cfg.constants = c;
  }

  root.finish();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  const auto base = std::filesystem::path(path).parent_path().string();
  return parse_config(doc, base.empty() ? "." : base);
}

}  // namespace decsaddle
