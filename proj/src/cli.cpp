#include "msabs/cli.hpp"

#include <chrono>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "msabs/error.hpp"
#include "msabs/parallel.hpp"
#include "msabs/persistence.hpp"
#include "msabs/validation.hpp"

namespace msabs {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kVersion = "1.0.0";

struct Options {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  unsigned jobs = 0;
  std::string out;
  int trials = 100;
  int paths = 50;
  int transitions = 10;
  std::optional<double> theta;
  std::optional<double> margin;
  std::optional<int> depth;
  double d_max_scale = 1.0;
  std::string format = "structured";
};

class Run {
 public:
  Run(const Options& opt, std::ostream& out) : opt_(opt), out_(out) {
    started_ = std::chrono::steady_clock::now();
    set_jobs(opt.jobs);
    scenario_ = load_scenario_file(opt.scenario);
    if (opt.seed) scenario_.numerics.seed = *opt.seed;
    if (opt.theta) scenario_.numerics.theta = *opt.theta;
    if (opt.margin) scenario_.numerics.margin = *opt.margin;
    validate_scenario(scenario_);
    if (!opt.out.empty()) fs::create_directories(opt.out);
  }

  const Engine& engine() {
    if (!engine_) {
      const auto t0 = std::chrono::steady_clock::now();
      EngineOptions eo;
      eo.d_max_scale = opt_.d_max_scale;
      engine_ = Engine::build(scenario_, eo);
      timing("engine", t0);
    }
    return *engine_;
  }

  const ProductTransitionSystem& product() {
    if (!product_) product_.emplace(engine());
    return *product_;
  }

  const LayerResult& layers() {
    if (!layers_) {
      const auto t0 = std::chrono::steady_clock::now();
      layers_ = product().build_layers(opt_.depth.value_or(engine().steps()));
      timing("layers", t0);
    }
    return *layers_;
  }

  std::vector<Path> sample_paths() {
    std::vector<Path> out;
    std::mt19937_64 rng(scenario_.numerics.seed);
    const int length = opt_.depth.value_or(engine().steps());
    for (int p = 0; p < opt_.paths; ++p) out.push_back(product().sample_path(length, rng));
    return out;
  }

  void document(const std::string& name, const std::string& kind, const json& payload) {
    if (opt_.out.empty()) return;
    save_document(path(name), kind, payload);
  }
  void text(const std::string& name, const std::string& body) {
    if (opt_.out.empty()) return;
    write_text(path(name), body);
  }

  void binary_layers(const std::string& name) {
    if (opt_.out.empty()) return;
    write_layers_binary(path(name), engine(), layers());
  }

  void timing(const std::string& what, std::chrono::steady_clock::time_point since) {
    timings_[what] = std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
  }

  void finish(const std::string& command) {
    if (opt_.out.empty()) return;
    timing("total", started_);
    json manifest = {{"command", command},
                     {"version", kVersion},
                     {"scenario_hash", fnv1a64(scenario_.source.dump())},
                     {"seed", scenario_.numerics.seed},
                     {"theta", scenario_.numerics.theta},
                     {"margin", scenario_.numerics.margin},
                     {"d_max_scale", opt_.d_max_scale},
                     {"outputs", written_},
                     {"timings_file", "timings.json"}};
    if (engine_) {
      const auto& d = engine_->discretization();
      manifest["dt"] = d.dt;
      manifest["steps"] = d.steps;
      manifest["tau"] = d.tau;
      manifest["d_max"] = d.d_max;
    }
    write_text((fs::path(opt_.out) / "manifest.json").string(), manifest.dump(2) + "\n");
    // Wall-clock numbers vary run to run, so they stay out of the manifest.
    write_text((fs::path(opt_.out) / "timings.json").string(), json(timings_).dump(2) + "\n");
  }

  const Scenario& scenario() const { return scenario_; }
  std::ostream& out() { return out_; }

 private:
  std::string path(const std::string& name) {
    written_.push_back(name);
    return (fs::path(opt_.out) / name).string();
  }

  Options opt_;
  std::ostream& out_;
  Scenario scenario_;
  std::optional<Engine> engine_;
  std::optional<ProductTransitionSystem> product_;
  std::optional<LayerResult> layers_;
  std::map<std::string, double> timings_;
  std::vector<std::string> written_;
  std::chrono::steady_clock::time_point started_;
};

void print_layer_sizes(Run& run) {
  const auto& l = run.layers();
  for (std::size_t k = 0; k < l.layers.size(); ++k)
    run.out() << "layer " << k << ": " << l.layers[k].size() << "\n";
  if (l.truncated) run.out() << "truncated: " << l.diagnostic << "\n";
}

void write_structured(Run& run) {
  const Engine& e = run.engine();
  const auto& l = run.layers();
  run.document("scenario.json", "scenario", scenario_payload(e.scenario()));
  run.document("certificate.json", "certificate", certificate_payload(e));
  for (std::size_t i = 0; i < e.size(); ++i) {
    const std::string id = std::to_string(e.scenario().agents[i].id);
    run.document("decomposition_" + id + ".json", "decomposition",
                 decomposition_payload(e.grid(i), e.scenario().agents[i].id));
    run.document("ts_" + id + ".json", "individual_ts",
                 individual_ts_payload(e, run.product().agent(i)));
  }
  run.document("layers.json", "layers", layers_payload(l));
}

void write_dot(Run& run) {
  const Engine& e = run.engine();
  const auto& l = run.layers();
  for (std::size_t i = 0; i < e.size(); ++i)
    run.text("ts_" + std::to_string(e.scenario().agents[i].id) + ".dot",
             individual_ts_dot(e, run.product().agent(i)));
  run.text("product.dot", product_dot(run.product(), l));
}

void write_csv(Run& run) {
  run.text("tube.csv", tube_csv(run.scenario(), run.engine().tube()));
  run.text("layers.csv", layers_csv(run.scenario(), run.layers()));
}

int cmd_params(Run& run) {
  run.out() << canonical_text(certificate_payload(run.engine()));
  run.document("certificate.json", "certificate", certificate_payload(run.engine()));
  run.finish("params");
  return run.engine().discretization().certificate.ok ? kExitOk : kExitInfeasible;
}

int cmd_abstract(Run& run) {
  print_layer_sizes(run);
  write_structured(run);
  write_dot(run);
  write_csv(run);
  run.binary_layers("layers.bin");
  run.finish("abstract");
  for (const auto& layer : run.layers().layers)
    if (layer.empty()) fail(ErrorKind::kInternal, "empty layer under a certified discretization");
  return kExitOk;
}

int cmd_plan(Run& run) {
  const auto paths = run.sample_paths();
  for (const auto& p : paths) {
    for (std::size_t k = 0; k < p.size(); ++k) {
      run.out() << (k ? " -> " : "") << "(";
      for (std::size_t i = 0; i < p[k].size(); ++i) run.out() << (i ? "," : "") << p[k][i];
      run.out() << ")";
    }
    run.out() << "\n";
  }
  run.document("paths.json", "paths", paths_payload(paths));
  run.finish("plan");
  return kExitOk;
}

int cmd_validate(Run& run, const Options& opt) {
  const auto& ts = run.product();
  const Engine& e = run.engine();
  const auto paths = run.sample_paths();

  json path_reports = json::array();
  std::size_t path_failures = 0;
  for (const auto& p : paths) {
    const auto r = realize_path(ts, p, e.eps());
    if (!r.ok) ++path_failures;
    path_reports.push_back(r.to_json(e.scenario()));
  }

  json consistency = json::array();
  std::size_t trial_failures = 0;
  int checked = 0;
  for (std::size_t p = 0; p < paths.size() && checked < opt.transitions; ++p) {
    for (std::size_t k = 0; k + 1 < paths[p].size() && checked < opt.transitions; ++k) {
      for (std::size_t i = 0; i < e.size(); ++i) {
        ConsistencyOptions co;
        co.trials = opt.trials;
        co.seed = derive_seed(e.scenario().numerics.seed, static_cast<std::uint64_t>(checked));
        const auto cfg = project_configuration(paths[p][k], e.scenario().graph, i);
        const auto rep = check_consistency(ts, cfg, paths[p][k + 1][i], co);
        trial_failures += rep.violations();
        consistency.push_back(to_json(rep, e.scenario()));
      }
      ++checked;
    }
  }
  run.out() << "paths: " << paths.size() - path_failures << "/" << paths.size() << " realized\n";
  run.out() << "consistency: " << checked << " transitions, " << trial_failures
            << " violating trials\n";
  run.document("validation.json", "validation",
               {{"paths", path_reports},
                {"consistency", consistency},
                {"path_failures", path_failures},
                {"trial_failures", trial_failures}});
  run.finish("validate");
  return path_failures + trial_failures == 0 ? kExitOk : kExitValidation;
}

int cmd_export(Run& run, const Options& opt) {
  if (opt.format == "structured") {
    write_structured(run);
  } else if (opt.format == "dot") {
    write_dot(run);
  } else if (opt.format == "csv") {
    write_csv(run);
  } else {
    fail(ErrorKind::kConfig, "unknown export format '" + opt.format + "'");
  }
  run.finish("export");
  return kExitOk;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInfeasible: return kExitInfeasible;
    case ErrorKind::kValidation: return kExitValidation;
    case ErrorKind::kConfig:
    case ErrorKind::kIo: return kExitConfig;
    default: return kExitFailure;
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Finite abstractions of coupled multi-agent systems"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  Options opt;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--scenario", opt.scenario, "Scenario file (JSON)")
        ->required()
        ->envname("MSABS_SCENARIO");
    sub->add_option("--seed", opt.seed, "Random seed")->envname("MSABS_SEED");
    sub->add_option("--jobs", opt.jobs, "Worker threads (0 = all cores)")->envname("MSABS_JOBS");
    sub->add_option("--out", opt.out, "Output directory")->envname("MSABS_OUT");
    sub->add_option("--theta", opt.theta, "Time-step safety factor")->envname("MSABS_THETA");
    sub->add_option("--margin", opt.margin, "Relative certificate margin")
        ->envname("MSABS_MARGIN");
    sub->add_option("--depth", opt.depth, "Number of layers / path length (default l)");
  };

  auto* params = app.add_subcommand("params", "Solve and print the discretization certificate");
  common(params);
  auto* abstract = app.add_subcommand("abstract", "Build transition systems and layers");
  common(abstract);
  auto* plan = app.add_subcommand("plan", "Sample paths of the product system");
  common(plan);
  plan->add_option("--paths", opt.paths, "Number of paths")->envname("MSABS_PATHS");
  auto* validate = app.add_subcommand("validate", "Realize paths and check consistency");
  common(validate);
  validate->add_option("--paths", opt.paths, "Number of paths")->envname("MSABS_PATHS");
  validate->add_option("--trials", opt.trials, "Trials per transition")->envname("MSABS_TRIALS");
  validate->add_option("--transitions", opt.transitions, "Transitions to check for consistency");
  validate->add_option("--d-max-scale", opt.d_max_scale,
                       "Scale solved cell diameters (negative control)");
  auto* exporter = app.add_subcommand("export", "Write exports in one format");
  common(exporter);
  exporter->add_option("--format", opt.format, "dot | csv | structured")
      ->check(CLI::IsMember({"dot", "csv", "structured"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    Run run(opt, out);
    if (*params) return cmd_params(run);
    if (*abstract) return cmd_abstract(run);
    if (*plan) return cmd_plan(run);
    if (*validate) return cmd_validate(run, opt);
    return cmd_export(run, opt);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace msabs
