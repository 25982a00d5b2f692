#include "decsaddle/runner.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

namespace decsaddle {

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

DecGraph<double> build_graph(const TopologyConfig& t) {
  if (t.kind == "ring") return build_ring(t.m);
  if (t.kind == "torus") return build_torus(t.rows, t.cols);
  return single_node();
}

Compressor<double> build_compressor(const RunConfig& cfg, Index dim) {
  if (cfg.compression.identity) return Compressor<double>::identity();
  double delta = 0;
  if (cfg.compression.delta) {
    delta = *cfg.compression.delta;
  } else {
    Engine rng = branch(SeedTree(cfg.seed), Stream::kDelta).engine();
    delta = estimate_delta<double>(cfg.compression.bits, dim, cfg.compression.delta_trials, rng);
  }
  return Compressor<double>::quantize(cfg.compression.bits, delta);
}

PrimalDualPoint<double> initial_point(const RunConfig& cfg, Index dx, Index dy) {
  PrimalDualPoint<double> z{Vector<double>::Zero(dx), Vector<double>::Zero(dy)};
  if (cfg.init.kind == "gaussian") {
    Engine rng = branch(SeedTree(cfg.seed), Stream::kInit).engine();
    std::normal_distribution<double> normal(0.0, cfg.init.scale);
    for (Index i = 0; i < dx; ++i) z.x(i) = normal(rng);
    for (Index i = 0; i < dy; ++i) z.y(i) = normal(rng);
    z.x = project_ball(z.x, cfg.problem.R_x);
    z.y = project_ball(z.y, cfg.problem.R_y);
  }
  return z;
}

double resolve_p(const RunConfig& cfg, Index n, const SaddleConstants<double>& c) {
  if (cfg.oracle.p_rule == "1/n") return 1.0 / static_cast<double>(n);
  if (cfg.oracle.p_rule == "1/kappa_f") return std::min(1.0, 1.0 / c.kappa_f());
  return cfg.oracle.p;
}

json constants_json(const SaddleConstants<double>& c) {
  return json{{"mu_x", c.mu_x}, {"mu_y", c.mu_y}, {"L_xx", c.L_xx}, {"L_yy", c.L_yy}, {"L_xy", c.L_xy},
              {"L_yx", c.L_yx}, {"L", c.L()},     {"mu", c.mu()},     {"kappa_f", c.kappa_f()}};
}

json stage_json(const StageParams<double>& p) {
  return json{{"k", p.k},       {"s", p.s},         {"b_x", p.b_x},         {"b_y", p.b_y},
              {"gamma_x", p.gamma_x}, {"gamma_y", p.gamma_y}, {"alpha_x", p.alpha_x}, {"alpha_y", p.alpha_y},
              {"M_x", p.M_x},   {"M_y", p.M_y},     {"M", p.M},             {"rho", p.rho},
              {"rho_k", p.rho_k}, {"t", p.t}};
}

json svrg_json(const SvrgParams<double>& q) {
  return json{{"s", q.s},           {"c_tilde_x", q.c_tilde_x}, {"c_tilde_y", q.c_tilde_y}, {"b_x", q.b_x},
              {"b_y", q.b_y},       {"alpha_x", q.alpha_x},     {"alpha_y", q.alpha_y},     {"gamma_x", q.gamma_x},
              {"gamma_y", q.gamma_y}, {"M_x", q.M_x},           {"M_y", q.M_y},             {"p", q.p},
              {"p_min", q.p_min},   {"rho", q.rho},             {"b_lower", q.b_lower}};
}

const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::kCrdpsg:
      return "crdpsg";
    case Algorithm::kCdpsvrg:
      return "cdpsvrg";
    case Algorithm::kReference:
      return "reference";
  }
  return "?";
}

json config_json(const RunConfig& cfg) {
  json topo{{"kind", cfg.topology.kind}};
  if (cfg.topology.kind == "ring") topo["m"] = cfg.topology.m;
  if (cfg.topology.kind == "torus") {
    topo["rows"] = cfg.topology.rows;
    topo["cols"] = cfg.topology.cols;
  }
  json data{{"kind", cfg.dataset.kind}};
  if (cfg.dataset.kind == "synthetic") {
    data["N"] = cfg.dataset.N;
    data["d"] = cfg.dataset.d;
    data["seed"] = cfg.dataset.seed;
  } else {
    data["path"] = cfg.dataset.path;
  }
  json comp{{"kind", cfg.compression.identity ? "identity" : "qinf"}};
  if (!cfg.compression.identity) {
    comp["bits"] = cfg.compression.bits;
    comp["delta"] = cfg.compression.delta ? json(*cfg.compression.delta) : json("auto");
    comp["delta_trials"] = cfg.compression.delta_trials;
  }
  json out{{"algorithm", algorithm_name(cfg.algorithm)},
           {"seed", cfg.seed},
           {"topology", topo},
           {"dataset", data},
           {"partition",
            {{"m", cfg.partition.m},
             {"n", cfg.partition.n},
             {"mode", cfg.partition.mode == PartitionMode::kShuffled ? "shuffled" : "sorted"}}},
           {"problem",
            {{"lambda", cfg.problem.lambda}, {"beta", cfg.problem.beta}, {"R_x", cfg.problem.R_x}, {"R_y", cfg.problem.R_y}}},
           {"compression", comp},
           {"oracle", {{"p", cfg.oracle.p_rule == "value" ? json(cfg.oracle.p) : json(cfg.oracle.p_rule)}}},
           {"budget", {{"iterations", cfg.budget.iterations}, {"stages", cfg.budget.stages}}},
           {"log", {{"stride", cfg.log.stride}, {"output", cfg.log.output}, {"phi", cfg.log.phi}}},
           {"reference",
            {{"mode", cfg.reference.mode},
             {"path", cfg.reference.path},
             {"iterations", cfg.reference.iterations},
             {"tolerance", cfg.reference.tolerance}}},
           {"init", {{"kind", cfg.init.kind}, {"scale", cfg.init.scale}}}};
  if (cfg.budget.stage_iterations) out["budget"]["stage_iterations"] = *cfg.budget.stage_iterations;
  if (!cfg.oracle.distribution.empty()) out["oracle"]["distribution"] = cfg.oracle.distribution;
  if (cfg.constants) out["constants"] = constants_json(*cfg.constants);
  return out;
}

json spectral_json(const SpectralInfo<double>& s) {
  return json{{"lambda_max", s.lambda_max}, {"lambda_second_smallest", s.lambda_second_smallest}, {"kappa_g", s.kappa_g}};
}

PrimalDualPoint<double> obtain_reference(const Experiment& ex, std::ostream& err, double& residual) {
  const auto& cfg = ex.config;
  if (cfg.reference.mode == "load") {
    const auto stored = read_reference(cfg.reference.path);
    if (stored.z.x.size() != ex.problem.dim_x() || stored.z.y.size() != ex.problem.dim_y()) {
      throw ConfigError("reference.path: stored saddle point has the wrong dimension");
    }
    residual = stored.residual;
    return stored.z;
  }
  const auto r = reference_for(ex);
  if (r.residual > 1e-7) {
    err << "warning: reference residual " << fmt(r.residual) << " after " << r.iterations << " iterations\n";
  }
  residual = r.residual;
  return r.z;
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ParseError& e) {
    err << "config error: dataset " << e.what() << '\n';
    return kConfigError;
  } catch (const TopologyError& e) {
    err << "config error: topology: " << e.what() << '\n';
    return kConfigError;
  } catch (const InfeasibleParameters& e) {
    err << "infeasible parameters: " << e.what() << '\n';
    return kInfeasible;
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::runtime_error& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }
}

void report_windows(std::ostream& out, const std::string& title, const FeasibilityReport& r) {
  out << title << '\n';
  for (const auto& c : r) {
    out << "  [" << (c.ok ? " ok " : "FAIL") << "] " << c.name << " = " << fmt(c.value) << "  in "
        << (c.lower_inclusive ? '[' : '(') << fmt(c.lower) << ", " << fmt(c.upper) << (c.upper_inclusive ? ']' : ')')
        << '\n';
  }
}

void print_fields(std::ostream& out, const json& j, const std::string& indent) {
  for (const auto& item : j.items()) out << indent << item.key() << " = " << item.value().dump() << '\n';
}

}  // namespace

Experiment build_experiment(const RunConfig& cfg) {
  Dataset ds = cfg.dataset.kind == "synthetic" ? synthesize(cfg.dataset.N, cfg.dataset.d, cfg.dataset.seed)
                                               : load_libsvm(cfg.dataset.path);
  if (ds.size() < cfg.partition.m * cfg.partition.n) {
    throw ConfigError("partition: " + std::to_string(ds.size()) + " samples cannot fill " +
                      std::to_string(cfg.partition.m) + " nodes x " + std::to_string(cfg.partition.n) + " batches");
  }
  Partition part = partition(ds, cfg.partition.m, cfg.partition.n, cfg.seed, cfg.partition.mode);
  auto problem = make_robust_lr<double>(ds, part, cfg.problem);
  auto graph = build_graph(cfg.topology);
  auto spec = spectral(graph);
  const auto constants = cfg.constants ? *cfg.constants : problem.lipschitz_constants();
  auto compressor = build_compressor(cfg, problem.dim_x());
  const double p = resolve_p(cfg, cfg.partition.n, constants);
  auto z0 = initial_point(cfg, problem.dim_x(), problem.dim_y());
  return Experiment{cfg,  std::move(ds), std::move(part), std::move(problem), std::move(graph), std::move(spec),
                    constants, compressor, p, std::move(z0)};
}

RobustLRProblem<double> single_node_problem(const Experiment& ex) {
  const auto part = partition(ex.dataset, 1, ex.config.partition.n, ex.config.seed, PartitionMode::kShuffled);
  return make_robust_lr<double>(ex.dataset, part, ex.config.problem);
}

ReferenceResult<double> reference_for(const Experiment& ex) {
  const auto single = single_node_problem(ex);
  ReferenceOptions<double> opt;
  opt.max_iterations = ex.config.reference.iterations;
  opt.tolerance = ex.config.reference.tolerance;
  opt.seed = ex.config.seed;
  return compute_reference(single, opt);
}

void write_reference(const std::string& path, const PrimalDualPoint<double>& z, double residual) {
  std::ofstream out(path);
  if (!out) throw ConfigError(path + ": cannot write saddle point file");
  out << "# saddle point: dim_x x values, then dim_y y values\n";
  out << "dim_x " << z.x.size() << '\n' << "dim_y " << z.y.size() << '\n' << "residual " << fmt(residual) << '\n';
  for (Index i = 0; i < z.x.size(); ++i) out << fmt(z.x(i)) << '\n';
  for (Index i = 0; i < z.y.size(); ++i) out << fmt(z.y(i)) << '\n';
}

StoredReference read_reference(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open saddle point file");
  std::string line;
  auto next = [&]() -> std::string {
    while (std::getline(in, line)) {
      if (!line.empty() && line[0] != '#') return line;
    }
    throw ConfigError(path + ": truncated saddle point file");
  };
  auto header = [&](const std::string& key) {
    std::istringstream ss(next());
    std::string name;
    double value = 0;
    if (!(ss >> name >> value) || name != key) throw ConfigError(path + ": expected '" + key + "' header");
    return value;
  };
  const auto dx = static_cast<Index>(header("dim_x"));
  const auto dy = static_cast<Index>(header("dim_y"));
  StoredReference out;
  out.residual = header("residual");
  out.z.x.resize(dx);
  out.z.y.resize(dy);
  for (Index i = 0; i < dx + dy; ++i) {
    const auto text = next();
    double v = 0;
    try {
      v = std::stod(text);
    } catch (const std::exception&) {
      throw ConfigError(path + ": bad value '" + text + "'");
    }
    (i < dx ? out.z.x(i) : out.z.y(i - dx)) = v;
  }
  return out;
}

void write_trace_csv(std::ostream& out, const Trace<double>& trace, bool with_phi) {
  out << "iter,grad_units,comm_rounds,bits,dist_sq" << (with_phi ? ",phi" : "") << '\n';
  for (const auto& row : trace.rows) {
    out << row.iter << ',' << row.cost.grad_units << ',' << row.cost.comm_rounds << ',' << row.cost.bits << ','
        << fmt(row.dist_sq);
    if (with_phi) out << ',' << fmt(row.phi.value_or(0.0));
    out << '\n';
  }
}

int command_reference(const std::string& config_path, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto cfg = load_config(config_path);
    if (cfg.reference.path.empty()) throw ConfigError("reference.path: needed to store the saddle point");
    const auto ex = build_experiment(cfg);
    const auto r = reference_for(ex);
    if (r.residual > 1e-7) {
      err << "warning: reference residual " << fmt(r.residual) << " after " << r.iterations << " iterations\n";
    }
    write_reference(cfg.reference.path, r.z, r.residual);
    out << "saddle point written to " << cfg.reference.path << " (residual " << fmt(r.residual) << ", "
        << r.iterations << " iterations)\n";
    return int(kOk);
  });
}

int command_run(const std::string& config_path, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto cfg = load_config(config_path);
    if (cfg.algorithm == Algorithm::kReference) return command_reference(config_path, out, err);
    const auto ex = build_experiment(cfg);

    double ref_residual = 0;
    RunOptions<double> opt;
    opt.seed = cfg.seed;
    opt.stride = cfg.log.stride;
    opt.log_phi = cfg.log.phi;
    opt.constants = ex.constants;
    opt.z_star = obtain_reference(ex, err, ref_residual);

    Trace<double> trace;
    json derived;
    if (cfg.algorithm == Algorithm::kCrdpsg) {
      trace = run_crdpsg(ex.problem, ex.graph, ex.spec, ex.compressor, ex.z0, cfg.budget.stages, opt,
                         cfg.budget.stage_iterations);
      derived = json::array();
      for (const auto& sp : trace.stages) derived.push_back(stage_json(sp));
    } else {
      trace = run_cdpsvrg(ex.problem, ex.graph, ex.spec, ex.compressor, ex.z0, cfg.budget.iterations, ex.p, opt,
                          cfg.oracle.distribution);
      derived = svrg_json(*trace.svrg);
    }

    std::ofstream csv(cfg.log.output);
    if (!csv) throw ConfigError("log.output: cannot write " + cfg.log.output);
    write_trace_csv(csv, trace, cfg.log.phi);

    json meta{{"config", config_json(cfg)},
              {"delta", ex.compressor.delta()},
              {"constants", constants_json(ex.constants)},
              {"spectral", spectral_json(ex.spec)},
              {"samples", ex.dataset.size()},
              {"dim", ex.problem.dim_x()},
              {"reference_residual", ref_residual},
              {"z_star", {{"x", std::vector<double>(opt.z_star->x.data(), opt.z_star->x.data() + opt.z_star->x.size())},
                          {"y", std::vector<double>(opt.z_star->y.data(), opt.z_star->y.data() + opt.z_star->y.size())}}},
              {"final",
               {{"grad_units", trace.cost.grad_units},
                {"comm_rounds", trace.cost.comm_rounds},
                {"bits", trace.cost.bits},
                {"dist_sq", trace.rows.back().dist_sq}}}};
    meta[cfg.algorithm == Algorithm::kCrdpsg ? "stages" : "svrg"] = derived;
    std::ofstream side(cfg.log.output + ".meta.json");
    if (!side) throw ConfigError("log.output: cannot write metadata next to " + cfg.log.output);
    side << std::setw(2) << meta << '\n';

    out << "wrote " << trace.rows.size() << " rows to " << cfg.log.output << "; final dist_sq "
        << fmt(trace.rows.back().dist_sq) << '\n';
    return int(kOk);
  });
}

int command_validate(const std::string& config_path, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto cfg = load_config(config_path);
    const auto ex = build_experiment(cfg);
    bool green = true;

    out << "problem: N = " << ex.dataset.size() << ", d = " << ex.problem.dim_x() << ", m = " << ex.problem.nodes()
        << ", n = " << ex.problem.batches() << '\n';
    out << "constants:\n";
    print_fields(out, constants_json(ex.constants), "  ");
    FeasibilityReport assumptions;
    assumptions.push_back(open_window("mu_x", ex.constants.mu_x, 0.0, INFINITY));
    assumptions.push_back(open_window("mu_y", ex.constants.mu_y, 0.0, INFINITY));
    assumptions.push_back(open_window("concavity margin beta/m - (N_i/N) R_x^2/4", ex.problem.concavity_margin(), 0.0,
                                      INFINITY));
    assumptions.push_back(WindowCheck{"kappa_f", ex.constants.kappa_f(), 1.0, INFINITY, true, false,
                                      ex.constants.kappa_f() >= 1.0});
    assumptions.push_back(WindowCheck{"delta", ex.compressor.delta(), 0.0, 1.0, true, true,
                                      ex.compressor.delta() >= 0.0 && ex.compressor.delta() <= 1.0});
    if (!ex.spec.trivial()) {
      assumptions.push_back(open_window("lambda_second_smallest", ex.spec.lambda_second_smallest, 1e-10, INFINITY));
    }
    report_windows(out, "assumptions:", assumptions);
    green = green && all_ok(assumptions);
    out << "graph:\n";
    print_fields(out, spectral_json(ex.spec), "  ");
    out << "compression: " << (ex.compressor.is_identity() ? "identity" : "qinf") << ", delta = " << fmt(ex.compressor.delta())
        << '\n';

    if (cfg.algorithm == Algorithm::kCrdpsg) {
      for (int k = 0; k < std::max(1, cfg.budget.stages); ++k) {
        auto sp = crdpsg_stage_schedule(k, ex.constants, ex.compressor.delta(), ex.spec);
        const auto r = stage_windows(sp, ex.spec);
        if (cfg.budget.stage_iterations) sp.t = *cfg.budget.stage_iterations;
        out << "stage " << k << ":\n";
        print_fields(out, stage_json(sp), "  ");
        report_windows(out, "stage " + std::to_string(k) + " windows:", r);
        green = green && all_ok(r);
      }
    } else {
      const bool ref = cfg.algorithm == Algorithm::kReference;
      const auto& spec = ref ? spectral(single_node()) : ex.spec;
      const double delta = ref ? 0.0 : ex.compressor.delta();
      const double p = ref ? 1.0 / static_cast<double>(cfg.partition.n) : ex.p;
      const auto constants = ref ? single_node_problem(ex).lipschitz_constants() : ex.constants;
      double p_min = 1.0 / static_cast<double>(cfg.partition.n);
      for (const auto& row : cfg.oracle.distribution)
        for (double q : row) p_min = std::min(p_min, q);
      const auto q = cdpsvrg_schedule(constants, delta, spec, cfg.partition.n, p_min, p);
      out << (ref ? "reference solver:\n" : "variance-reduced schedule:\n");
      print_fields(out, svrg_json(q), "  ");
      const auto r = svrg_windows(q, spec);
      report_windows(out, "windows:", r);
      green = green && all_ok(r);
    }
    out << "overall: " << (green ? "feasible" : "INFEASIBLE") << '\n';
    return int(kOk);
  });
}

}  // namespace decsaddle
