#include "csmspec/workbench.hpp"

#include "csmspec/csm.hpp"
#include "csmspec/error.hpp"
#include "csmspec/io.hpp"
#include "csmspec/rng.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>

namespace csmspec::workbench {

using nlohmann::json;

StageError::StageError(std::string stage, const std::string& message)
    : std::runtime_error("stage '" + stage + "' failed: " + message), stage_(std::move(stage)) {}

namespace {

void ensure(bool cond, const std::string& message) {
  if (!cond) throw ConfigError(message);
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  ensure(obj.is_object(), where + " must be a JSON object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || item.key() == a;
    ensure(known, "unknown key '" + item.key() + "' in " + where);
  }
}

template <class T>
T get_or(const json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

int get_int(const json& obj, const char* key, int fallback, int lo, int hi, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  ensure(v.is_number_integer(), where + "." + key + " must be an integer");
  const auto x = v.get<long long>();
  ensure(x >= lo && x <= hi, where + "." + key + " must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return static_cast<int>(x);
}

double get_real(const json& obj, const char* key, double fallback, double lo, double hi, bool lo_open, bool hi_open,
                const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  ensure(v.is_number(), where + "." + key + " must be a number");
  const double x = v.get<double>();
  const bool ok = std::isfinite(x) && (lo_open ? x > lo : x >= lo) && (hi_open ? x < hi : x <= hi);
  ensure(ok, where + "." + key + " must lie in " + (lo_open ? "(" : "[") + io::format_double(lo) + ", " +
                 io::format_double(hi) + (hi_open ? ")" : "]"));
  return x;
}

std::string get_enum(const json& obj, const char* key, const std::string& fallback,
                     std::initializer_list<const char*> choices, const std::string& where) {
  const auto s = get_or<std::string>(obj, key, fallback, where);
  for (const char* c : choices)
    if (s == c) return s;
  std::string list;
  for (const char* c : choices) list += std::string(list.empty() ? "" : ", ") + c;
  throw ConfigError(where + "." + key + " must be one of: " + list);
}

constexpr double kInf = std::numeric_limits<double>::infinity();

void parse_input(const json& j, const std::filesystem::path& base, InputConfig& in) {
  const std::string where = "input";
  ensure(j.is_object(), "input must be a JSON object");
  const auto kind = get_enum(j, "kind", "synthetic", {"synthetic", "points_csv", "csm_spec"}, where);
  if (kind == "synthetic") {
    check_keys(j, {"kind", "clusters", "dim", "points_per_cluster", "spread", "separation"}, where);
    in.kind = InputKind::Synthetic;
    in.mixture.clusters = get_int(j, "clusters", in.mixture.clusters, 1, 1000, where);
    in.mixture.dim = get_int(j, "dim", in.mixture.dim, 1, 100, where);
    in.mixture.points_per_cluster = get_int(j, "points_per_cluster", in.mixture.points_per_cluster, 1, 100000, where);
    in.mixture.spread = get_real(j, "spread", in.mixture.spread, 0.0, kInf, false, true, where);
    in.mixture.separation = get_real(j, "separation", in.mixture.separation, 0.0, kInf, false, true, where);
  } else {
    check_keys(j, {"kind", "path"}, where);
    in.kind = kind == "points_csv" ? InputKind::PointsCsv : InputKind::CsmSpec;
    ensure(j.contains("path") && j.at("path").is_string(), "input.path is required for kind '" + kind + "'");
    std::filesystem::path p = j.at("path").get<std::string>();
    in.path = p.is_absolute() || base.empty() ? p : base / p;
  }
}

std::string kind_name(InputKind k) {
  switch (k) {
    case InputKind::Synthetic: return "synthetic";
    case InputKind::PointsCsv: return "points_csv";
    case InputKind::CsmSpec: return "csm_spec";
  }
  return "synthetic";
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

using Timings = std::map<std::string, double>;

template <class F>
auto timed(const std::string& name, Timings& timings, F&& f) -> decltype(f()) {
  const auto start = std::chrono::steady_clock::now();
  auto record = [&] {
    timings[name] += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  try {
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      record();
    } else {
      auto result = f();
      record();
      return result;
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

struct Subject {
  std::optional<PointCloud> cloud;
  std::optional<CSMSpec> spec;
  std::optional<Grid> grid;
};

Subject load_subject(const RunConfig& config) {
  Subject s;
  try {
    switch (config.input.kind) {
      case InputKind::Synthetic:
        s.cloud = synth_mixture(config.input.mixture, stage_seed(config, stage::kData));
        break;
      case InputKind::PointsCsv:
        s.cloud = io::read_point_cloud_csv(config.input.path);
        s.cloud->validate();
        break;
      case InputKind::CsmSpec: {
        s.spec = io::read_csm_spec_json(config.input.path);
        auto cells = config.grid.cells_per_dim;
        const auto d = static_cast<std::size_t>(s.spec->dim());
        if (cells.empty()) cells.assign(d, d == 1 ? 200 : d == 2 ? 20 : 6);
        if (cells.size() == 1 && d > 1) cells.assign(d, cells.front());
        s.grid = make_grid(s.spec->box(), cells);
        break;
      }
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("input: " + std::string(e.what()));
  }
  return s;
}

void write_artifact(const RunConfig& config, const std::string& name, const std::string& text) {
  io::write_text(config.out / name, text);
}

json skeleton_summary(const SkeletonGraph& g) {
  json j;
  j["vertices"] = g.vertices;
  j["edges"] = g.edges.size();
  j["max_off_diagonal"] = g.max_off_diagonal();
  j["self_loops_only"] = g.self_loops_only();
  j["acyclic_without_self_loops"] = g.acyclic_without_self_loops();
  j["threshold"] = g.threshold;
  j["warnings"] = g.warnings;
  return j;
}

struct Stages {
  bool collapse = false;
  bool skeleton = false;
  bool metrics = false;
  bool spectral_artifacts = false;
};

void run_stages(const RunConfig& config, const Stages& stages) {
  (void)stage_seed(config, 0);
  Timings timings;
  json report;

  Subject subject = timed("ingest", timings, [&] { return load_subject(config); });
  report["input"] = {{"kind", kind_name(config.input.kind)},
                     {"points", subject.cloud ? json(subject.cloud->size()) : json(nullptr)},
                     {"dim", subject.cloud ? subject.cloud->dim() : subject.spec->dim()}};
  if (subject.cloud && config.input.kind == InputKind::Synthetic)
    write_artifact(config, "points.csv", io::point_cloud_csv(*subject.cloud));

  const KernelMatrix K = timed("kernel", timings, [&] {
    if (subject.cloud) {
      DiffusionOptions opts = config.kernel;
      opts.workers = config.workers;
      return diffusion_kernel(*subject.cloud, opts);
    }
    return ulam_kernel(*subject.spec, *subject.grid, config.grid.samples_per_cell, stage_seed(config, stage::kKernel),
                       UlamOptions{config.grid.escape, config.workers});
  });
  write_artifact(config, "kernel.json", io::kernel_sidecar_json(K));
  report["kernel"] = json::parse(io::kernel_sidecar_json(K));

  const SpectralDecomposition dec = timed("spectrum", timings, [&] {
    EigenOptions opts;
    opts.truncate_ill_conditioned = K.source == KernelSource::Ulam;
    return eigendecompose(K, std::min(config.spectral.k, K.size()), opts);
  });
  if (!dec.truncation.empty()) report["spectrum_truncation"] = dec.truncation;
  json eigenvalues = json::array();
  for (Eigen::Index i = 0; i < dec.values.size(); ++i)
    eigenvalues.push_back({dec.values[i].real(), dec.values[i].imag()});
  report["eigenvalues"] = eigenvalues;
  report["biorthogonality_residual"] = dec.biorthogonality_residual;
  report["conditioning"] = finite_or_null(dec.conditioning);

  const RankSelection rank = timed("rank", timings, [&] { return select_rank(dec, config.spectral.rank); });
  const std::size_t r = rank.r;
  report["r"] = r;
  report["gap_ratio"] = finite_or_null(rank.gap_ratio);
  report["no_gap"] = rank.no_gap || r <= 1;

  if (stages.spectral_artifacts) {
    write_artifact(config, "spectrum.csv", io::spectrum_csv(dec));
    write_artifact(config, "eigenvectors.csv", io::eigenvectors_csv(dec));
  }

  if (stages.collapse) {
    const CollapseReport col = timed("collapse", timings, [&] {
      CollapseOptions opts;
      opts.t_max = config.spectral.collapse_t_max;
      opts.n_probes = config.spectral.collapse_probes;
      opts.seed = stage_seed(config, stage::kCollapse);
      opts.workers = config.workers;
      return verify_collapse(K, dec, r, opts);
    });
    json c;
    c["r"] = col.r;
    c["mean_residual"] = col.mean_residual;
    c["max_residual"] = col.max_residual;
    c["fitted_slope"] = finite_or_null(col.fitted_slope);
    c["reference_slope"] = finite_or_null(col.reference_slope);
    c["rate_slope"] = finite_or_null(col.rate_slope);
    c["prefactor"] = finite_or_null(col.prefactor);
    c["conditioning"] = finite_or_null(col.conditioning);
    c["fit_points"] = col.fit_points;
    c["exact_collapse"] = col.exact_collapse;
    write_artifact(config, "collapse.json", c.dump(2) + "\n");
    report["collapse"] = {{"fitted_slope", c["fitted_slope"]},
                          {"reference_slope", c["reference_slope"]},
                          {"rate_slope", c["rate_slope"]},
                          {"exact_collapse", col.exact_collapse}};
  }

  const BasinLabeling labeling = timed("basins", timings, [&] { return assign_basins(dec, r, config.spectral.basins); });
  write_artifact(config, "labels.csv", io::labels_csv(labeling));
  report["basin_counts"] = labeling.counts();
  if (stages.spectral_artifacts)
    write_artifact(config, "coordinates.csv", io::coordinates_csv(spectral_coordinates(dec, r)));
  if (subject.cloud && subject.cloud->labels) {
    std::vector<int> truth = *subject.cloud->labels;
    report["ari_vs_truth"] = adjusted_rand_index(truth, labeling.labels);
  }

  if (stages.skeleton) {
    const Eigen::VectorXd mu = timed("stationary", timings, [&] {
      StationaryOptions opts;
      opts.lazy = true;
      return stationary_distribution(K, opts);
    });
    const double n = static_cast<double>(K.size());
    report["doeblin_epsilon"] = timed("doeblin", timings, [&] {
      return doeblin_check(K, Eigen::VectorXd::Constant(K.P.rows(), 1.0 / n));
    });
    const SkeletonGraph g = timed("skeleton", timings, [&] {
      return build_skeleton(K, labeling, mu, config.skeleton.threshold);
    });
    write_artifact(config, "skeleton.dot", g.to_dot());
    write_artifact(config, "skeleton_adjacency.csv", io::adjacency_csv(g));
    report["skeleton"] = skeleton_summary(g);
    if (subject.spec) {
      const SkeletonGraph rg = timed("rollouts", timings, [&] {
        RolloutOptions opts;
        opts.n_rollouts = config.skeleton.n_rollouts;
        opts.horizon = config.skeleton.horizon;
        opts.seed = stage_seed(config, stage::kRollouts);
        opts.threshold = config.skeleton.threshold;
        opts.workers = config.workers;
        return rollout_skeleton(*subject.spec, *subject.grid, labeling, opts);
      });
      write_artifact(config, "rollout_skeleton.dot", rg.to_dot());
      write_artifact(config, "rollout_skeleton_adjacency.csv", io::adjacency_csv(rg));
      report["rollout_skeleton"] = skeleton_summary(rg);
    }
  }

  if (stages.metrics) {
    const Eigen::MatrixXd features = subject.cloud ? subject.cloud->points : subject.grid->centers();
    if (subject.cloud) {
      const BootstrapReport boot = timed("bootstrap", timings, [&] {
        SpectralPipelineConfig pc;
        pc.kernel = config.kernel;
        pc.kernel.workers = 1;
        pc.modes = config.spectral.k;
        pc.basins = config.spectral.basins;
        return bootstrap_ari(*subject.cloud, labeling.labels, r, pc, config.metrics.bootstrap_B,
                             config.metrics.bootstrap_frac, stage_seed(config, stage::kBootstrap), config.workers);
      });
      report["ari_mean"] = boot.ari_mean;
      report["ari_std"] = finite_or_null(boot.ari_std);
      report["jaccard_ovr_mean"] = boot.jaccard_mean;
      report["bootstrap"] = {{"B", config.metrics.bootstrap_B},
                             {"frac", config.metrics.bootstrap_frac},
                             {"subsample_size", boot.subsample_size}};
    }
    auto held_out = [](const ClassifierReport& rep) {
      return rep.test_accuracy ? *rep.test_accuracy : rep.train_accuracy;
    };
    auto describe = [&](const ClassifierReport& rep) {
      return json{{"model", to_string(rep.kind)},
                  {"train_accuracy", rep.train_accuracy},
                  {"test_accuracy", rep.test_accuracy ? json(*rep.test_accuracy) : json(nullptr)},
                  {"n_train", rep.n_train},
                  {"n_test", rep.n_test},
                  {"degenerate", rep.degenerate},
                  {"description", rep.description}};
    };
    const ClassifierReport tree = timed("tree", timings, [&] {
      TreeOptions opts;
      opts.max_depth = config.metrics.tree_max_depth;
      opts.split_fraction = config.metrics.split_fraction;
      opts.seed = stage_seed(config, stage::kTree);
      return train_tree(features, labeling.labels, opts);
    });
    const ClassifierReport poly = timed("polylogistic", timings, [&] {
      PolyLogisticOptions opts;
      opts.degree = config.metrics.poly_degree;
      opts.l2 = config.metrics.poly_l2;
      opts.iters = config.metrics.poly_iters;
      opts.lr = config.metrics.poly_lr;
      opts.split_fraction = config.metrics.split_fraction;
      opts.seed = stage_seed(config, stage::kPolyLogistic);
      return train_polylogistic(features, labeling.labels, opts);
    });
    report["tree_acc"] = held_out(tree);
    report["polylog_acc"] = held_out(poly);
    report["classifiers"] = {{"tree", describe(tree)}, {"polylogistic", describe(poly)}};
  }

  report["seed"] = *config.seed;
  report["timing_seconds"] = timings;
  write_artifact(config, "report.json", report.dump(2) + "\n");
}

std::string norm_name(NormKind k) { return k == NormKind::Spectral ? "spectral" : "max_row_sum"; }

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, {"seed", "workers", "out", "input", "kernel", "grid", "spectral", "metrics", "skeleton", "simulate",
                 "adiabatic"},
             "config");
  RunConfig c;
  if (j.contains("seed")) {
    const json& s = j.at("seed");
    ensure(s.is_number_unsigned() || (s.is_number_integer() && s.get<long long>() >= 0),
           "seed must be a non-negative integer");
    c.seed = s.get<std::uint64_t>();
  }
  c.workers = get_int(j, "workers", 1, 1, 1024, "config");
  if (j.contains("out")) {
    ensure(j.at("out").is_string(), "out must be a string");
    std::filesystem::path p = j.at("out").get<std::string>();
    c.out = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
  }
  if (j.contains("input")) parse_input(j.at("input"), base_dir, c.input);

  if (j.contains("kernel")) {
    const json& k = j.at("kernel");
    check_keys(k, {"bandwidth", "variant"}, "kernel");
    if (k.contains("bandwidth")) {
      const json& b = k.at("bandwidth");
      if (b.is_string()) {
        ensure(b.get<std::string>() == "median", "kernel.bandwidth must be a positive number or \"median\"");
      } else {
        c.kernel.bandwidth = get_real(k, "bandwidth", 1.0, 0.0, kInf, true, true, "kernel");
      }
    }
    c.kernel.variant = get_enum(k, "variant", "squared", {"squared", "plain"}, "kernel") == "plain"
                           ? DiffusionVariant::Plain
                           : DiffusionVariant::Squared;
  }

  if (j.contains("grid")) {
    const json& g = j.at("grid");
    check_keys(g, {"cells_per_dim", "samples_per_cell", "escape"}, "grid");
    if (g.contains("cells_per_dim")) {
      const json& cpd = g.at("cells_per_dim");
      auto add = [&](const json& v) {
        ensure(v.is_number_integer() && v.get<long long>() >= 1, "grid.cells_per_dim entries must be integers >= 1");
        c.grid.cells_per_dim.push_back(v.get<std::size_t>());
      };
      if (cpd.is_array()) {
        ensure(!cpd.empty(), "grid.cells_per_dim must not be empty");
        for (const auto& v : cpd) add(v);
      } else {
        add(cpd);
      }
    }
    c.grid.samples_per_cell = get_int(g, "samples_per_cell", c.grid.samples_per_cell, 1, 1000000, "grid");
    const auto esc = get_enum(g, "escape", "clamp", {"clamp", "self_loop", "error"}, "grid");
    c.grid.escape = esc == "clamp" ? EscapePolicy::Clamp : esc == "self_loop" ? EscapePolicy::SelfLoop : EscapePolicy::Error;
  }

  if (j.contains("spectral")) {
    const json& s = j.at("spectral");
    const std::string w = "spectral";
    check_keys(s, {"k", "rank_method", "epsilon", "basis", "drop_trivial", "collapse"}, w);
    c.spectral.k = static_cast<std::size_t>(get_int(s, "k", 10, 1, 100000, w));
    c.spectral.rank.method =
        get_enum(s, "rank_method", "max_ratio", {"max_ratio", "threshold"}, w) == "threshold" ? RankMethod::Threshold
                                                                                              : RankMethod::MaxRatio;
    c.spectral.rank.epsilon = get_real(s, "epsilon", c.spectral.rank.epsilon, 0.0, 1.0, true, true, w);
    c.spectral.basins.basis =
        get_enum(s, "basis", "localized", {"localized", "eigen"}, w) == "eigen" ? BasinBasis::Eigen : BasinBasis::Localized;
    c.spectral.basins.drop_trivial = get_or<bool>(s, "drop_trivial", false, w);
    if (s.contains("collapse")) {
      const json& col = s.at("collapse");
      check_keys(col, {"t_max", "n_probes"}, "spectral.collapse");
      c.spectral.collapse_t_max = get_int(col, "t_max", c.spectral.collapse_t_max, 3, 100000, "spectral.collapse");
      c.spectral.collapse_probes = get_int(col, "n_probes", c.spectral.collapse_probes, 1, 100000, "spectral.collapse");
    }
  }

  if (j.contains("metrics")) {
    const json& m = j.at("metrics");
    const std::string w = "metrics";
    check_keys(m, {"bootstrap_B", "bootstrap_frac", "split_fraction", "tree", "polylogistic"}, w);
    c.metrics.bootstrap_B = get_int(m, "bootstrap_B", c.metrics.bootstrap_B, 1, 100000, w);
    c.metrics.bootstrap_frac = get_real(m, "bootstrap_frac", c.metrics.bootstrap_frac, 0.0, 1.0, true, false, w);
    c.metrics.split_fraction = get_real(m, "split_fraction", c.metrics.split_fraction, 0.0, 1.0, true, false, w);
    if (m.contains("tree")) {
      check_keys(m.at("tree"), {"max_depth"}, "metrics.tree");
      c.metrics.tree_max_depth = get_int(m.at("tree"), "max_depth", c.metrics.tree_max_depth, 0, 64, "metrics.tree");
    }
    if (m.contains("polylogistic")) {
      const json& p = m.at("polylogistic");
      const std::string pw = "metrics.polylogistic";
      check_keys(p, {"degree", "l2", "iters", "lr"}, pw);
      c.metrics.poly_degree = get_int(p, "degree", c.metrics.poly_degree, 1, 2, pw);
      c.metrics.poly_l2 = get_real(p, "l2", c.metrics.poly_l2, 0.0, kInf, false, true, pw);
      c.metrics.poly_iters = get_int(p, "iters", c.metrics.poly_iters, 0, 10000000, pw);
      c.metrics.poly_lr = get_real(p, "lr", c.metrics.poly_lr, 0.0, kInf, true, true, pw);
    }
  }

  if (j.contains("skeleton")) {
    const json& s = j.at("skeleton");
    check_keys(s, {"threshold", "n_rollouts", "horizon"}, "skeleton");
    c.skeleton.threshold = get_real(s, "threshold", c.skeleton.threshold, 0.0, 1.0, false, false, "skeleton");
    c.skeleton.n_rollouts = get_int(s, "n_rollouts", c.skeleton.n_rollouts, 1, 100000000, "skeleton");
    c.skeleton.horizon = get_int(s, "horizon", c.skeleton.horizon, 1, 1000000, "skeleton");
  }

  if (j.contains("simulate")) {
    const json& s = j.at("simulate");
    check_keys(s, {"n_rollouts", "steps", "s0"}, "simulate");
    c.simulate.n_rollouts = get_int(s, "n_rollouts", c.simulate.n_rollouts, 1, 1000000, "simulate");
    c.simulate.steps = get_int(s, "steps", c.simulate.steps, 1, 100000000, "simulate");
    if (s.contains("s0")) {
      const json& v = s.at("s0");
      ensure(v.is_array() && !v.empty(), "simulate.s0 must be a non-empty array");
      Eigen::VectorXd s0(static_cast<Eigen::Index>(v.size()));
      for (std::size_t i = 0; i < v.size(); ++i) {
        ensure(v[i].is_number(), "simulate.s0 entries must be numbers");
        s0[static_cast<Eigen::Index>(i)] = v[i].get<double>();
      }
      c.simulate.s0 = s0;
    }
  }

  if (j.contains("adiabatic")) {
    const json& a = j.at("adiabatic");
    const std::string w = "adiabatic";
    check_keys(a, {"etas", "n", "size", "r", "mixing", "norm"}, w);
    if (a.contains("etas")) {
      const json& e = a.at("etas");
      ensure(e.is_array() && !e.empty(), "adiabatic.etas must be a non-empty array");
      c.adiabatic.etas.clear();
      for (const auto& v : e) {
        ensure(v.is_number() && v.get<double>() >= 0.0 && std::isfinite(v.get<double>()),
               "adiabatic.etas entries must be finite numbers >= 0");
        c.adiabatic.etas.push_back(v.get<double>());
      }
    }
    c.adiabatic.n = get_int(a, "n", c.adiabatic.n, 1, 100000, w);
    c.adiabatic.size = static_cast<std::size_t>(get_int(a, "size", static_cast<int>(c.adiabatic.size), 2, 2000, w));
    c.adiabatic.r = static_cast<std::size_t>(get_int(a, "r", static_cast<int>(c.adiabatic.r), 1, 1999, w));
    ensure(c.adiabatic.r < c.adiabatic.size, "adiabatic.r must be smaller than adiabatic.size");
    c.adiabatic.mixing = get_real(a, "mixing", c.adiabatic.mixing, 0.0, 1.0, false, false, w);
    c.adiabatic.norm =
        get_enum(a, "norm", "spectral", {"spectral", "max_row_sum"}, w) == "spectral" ? NormKind::Spectral : NormKind::MaxRowSum;
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = io::read_text(path);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return parse_run_config(text, path.parent_path());
}

std::uint64_t stage_seed(const RunConfig& config, std::uint64_t stage) {
  ensure(config.seed.has_value(), "a master seed is required (config \"seed\" or --seed)");
  return derive_seed(*config.seed, stage);
}

void cmd_simulate(const RunConfig& config) {
  const std::uint64_t master = stage_seed(config, stage::kSimulate);
  ensure(config.input.kind == InputKind::CsmSpec, "simulate needs input.kind = \"csm_spec\"");
  CSMSpec spec = [&] {
    try {
      return io::read_csm_spec_json(config.input.path);
    } catch (const std::exception& e) {
      throw ConfigError("input: " + std::string(e.what()));
    }
  }();
  const Eigen::VectorXd s0 = config.simulate.s0.value_or(spec.s0());
  ensure(s0.size() == spec.dim(), "simulate.s0 has dimension " + std::to_string(s0.size()) + ", spec has " +
                                      std::to_string(spec.dim()));

  Timings timings;
  const auto n = static_cast<std::size_t>(config.simulate.n_rollouts);
  const int width = std::max(3, static_cast<int>(std::to_string(n - 1).size()));
  std::vector<std::string> files(n);
  std::vector<std::string> texts(n);
  std::vector<std::uint64_t> seeds(n);
  timed("simulate", timings, [&] {
    parallel_for(n, config.workers, [&](std::size_t i) {
      seeds[i] = derive_seed(master, i);
      texts[i] = io::trajectory_csv(simulate(spec, s0, config.simulate.steps, seeds[i]));
      char name[64];
      std::snprintf(name, sizeof(name), "trajectory_%0*zu.csv", width, i);
      files[i] = name;
    });
  });
  json rollouts = json::array();
  for (std::size_t i = 0; i < n; ++i) {
    write_artifact(config, files[i], texts[i]);
    rollouts.push_back({{"index", i}, {"file", files[i]}, {"seed", seeds[i]}});
  }
  json manifest;
  manifest["master_seed"] = *config.seed;
  manifest["stage_seed"] = master;
  manifest["seed_rule"] = "rollout i uses derive_seed(derive_seed(master_seed, 7), i)";
  manifest["steps"] = config.simulate.steps;
  manifest["decoder"] = spec.decoder() == DecoderMode::GaussianLogit ? "gaussian" : "softmax";
  manifest["sigma_dec"] = spec.sigma_dec();
  manifest["rollouts"] = rollouts;
  write_artifact(config, "manifest.json", manifest.dump(2) + "\n");
}

void cmd_pipeline(const RunConfig& config) { run_stages(config, {true, true, true, true}); }

void cmd_skeleton(const RunConfig& config) { run_stages(config, {false, true, false, false}); }

void cmd_metrics(const RunConfig& config) { run_stages(config, {false, false, true, false}); }

void cmd_adiabatic(const RunConfig& config) {
  const std::uint64_t seed = stage_seed(config, stage::kAdiabatic);
  const AdiabaticConfig& a = config.adiabatic;
  Timings timings;
  const KernelMatrix base = random_kernel(a.size, derive_seed(seed, 0), a.mixing);
  const KernelMatrix target = random_kernel(a.size, derive_seed(seed, 1), a.mixing);

  json sweep = json::array();
  for (const double eta : a.etas) {
    const AdiabaticFamily fam = timed("adiabatic", timings, [&] { return family_with_drift(base, target, eta, a.n, a.norm); });
    const AdiabaticError err = timed("adiabatic", timings, [&] { return compare_adiabatic(fam, a.n); });
    json per_n = json::array();
    timed("adiabatic", timings, [&] {
      for (int m = 1; m <= a.n; ++m) {
        const AdiabaticError e = compare_adiabatic(fam, m);
        per_n.push_back({{"n", m}, {"error", e.error}, {"ratio", finite_or_null(e.ratio)}});
      }
    });
    const GapReport gap = timed("gap", timings, [&] { return uniform_gap_check(fam, a.r, config.workers); });
    sweep.push_back({{"eta_requested", eta},
                     {"eta", fam.eta},
                     {"steps", fam.length()},
                     {"error", err.error},
                     {"ratio", finite_or_null(err.ratio)},
                     {"per_n", per_n},
                     {"gap", {{"gamma", gap.gamma}, {"argmin", gap.argmin}, {"closed", gap.closed}, {"message", gap.message}}}});
  }
  double lo = kInf;
  double hi = 0.0;
  for (const auto& e : sweep)
    if (e["ratio"].is_number()) {
      lo = std::min(lo, e["ratio"].get<double>());
      hi = std::max(hi, e["ratio"].get<double>());
    }

  json report;
  report["seed"] = *config.seed;
  report["n"] = a.n;
  report["size"] = a.size;
  report["r"] = a.r;
  report["mixing"] = a.mixing;
  report["norm"] = norm_name(a.norm);
  report["endpoint_distance"] = operator_norm(target.P - base.P, a.norm);
  report["sweep"] = sweep;
  report["ratio_band"] = lo <= hi ? json(hi / lo) : json(nullptr);
  report["timing_seconds"] = timings;
  write_artifact(config, "adiabatic.json", report.dump(2) + "\n");
}

int run(const Invocation& invocation, std::ostream& err) {
  try {
    RunConfig config = load_run_config(invocation.config);
    if (!invocation.out.empty()) config.out = invocation.out;
    if (invocation.seed) config.seed = invocation.seed;
    if (invocation.workers) {
      ensure(*invocation.workers >= 1, "--workers must be >= 1");
      config.workers = *invocation.workers;
    }
    if (invocation.drop_trivial) config.spectral.basins.drop_trivial = true;
    ensure(config.seed.has_value(), "a master seed is required (config \"seed\" or --seed)");
    ensure(!config.out.empty(), "an output directory is required (config \"out\" or --out)");
    std::error_code ec;
    std::filesystem::create_directories(config.out, ec);
    ensure(!ec, "cannot create output directory " + config.out.string() + ": " + ec.message());

    switch (invocation.command) {
      case Command::Simulate: cmd_simulate(config); break;
      case Command::Pipeline: cmd_pipeline(config); break;
      case Command::Adiabatic: cmd_adiabatic(config); break;
      case Command::Skeleton: cmd_skeleton(config); break;
      case Command::Metrics: cmd_metrics(config); break;
    }
    return 0;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const StageError& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace csmspec::workbench
