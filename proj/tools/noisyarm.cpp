#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "noisyarm/config.hpp"
#include "noisyarm/csv.hpp"
#include "noisyarm/generator.hpp"
#include "noisyarm/gradcheck.hpp"
#include "noisyarm/report.hpp"

namespace {

using namespace noisyarm;

std::string resolve_out_dir(const std::string& flag_value, const RunConfig& cfg) {
  if (!flag_value.empty()) return flag_value;
  if (!cfg.out_dir.empty()) return cfg.out_dir;
  if (const char* env = std::getenv("NOISYARM_OUT"); env && *env) return env;
  return "out";
}

struct CommonFlags {
  std::string config_path;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::size_t workers = 0;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "configuration file (key = value with [sections])");
    app->add_option("--out", out, "output directory (fallback: NOISYARM_OUT, then ./out)");
    app->add_option("--seed", seed, "master seed")->each([this](const std::string&) {
      seed_set = true;
    });
    app->add_option("--workers", workers, "worker thread count");
  }

  RunConfig load() const {
    RunConfig cfg;
    if (!config_path.empty()) cfg = load_run_config(config_path);
    if (seed_set) {
      cfg.master_seed = seed;
      cfg.generator.seed = seed;
    }
    if (workers > 0) cfg.workers = workers;
    return cfg;
  }
};

std::string ensure_dir(const std::string& dir) {
  std::filesystem::create_directories(dir);
  return dir;
}

int cmd_generate(const CommonFlags& flags) {
  RunConfig cfg = flags.load();
  const std::string dir = ensure_dir(resolve_out_dir(flags.out, cfg));
  const Dataset dataset = generate(cfg.generator);
  const std::string path = dir + "/dataset.csv";
  export_csv(dataset, path);
  std::printf("wrote %s: %zu samples, %zu channels, %zu timesteps\n", path.c_str(),
              dataset.size(), dataset.channels(), dataset.timesteps());
  return 0;
}

int cmd_ingest(const CommonFlags& flags, const std::string& input) {
  RunConfig cfg = flags.load();
  const std::string path = input.empty() ? cfg.ingest_path : input;
  if (path.empty()) throw std::invalid_argument("ingest: --input or dataset.path required");
  const Dataset dataset = ingest_csv(path);
  std::vector<std::size_t> per_class(kNumClasses, 0);
  for (const auto& s : dataset.samples()) ++per_class[static_cast<std::size_t>(s.label)];
  std::printf("ingested %s: %zu samples, %zu channels, %zu timesteps\n", path.c_str(),
              dataset.size(), dataset.channels(), dataset.timesteps());
  for (int k = 0; k < kNumClasses; ++k) {
    std::printf("  class %d (%s): %zu samples\n", k, dataset.class_names()[k].c_str(),
                per_class[static_cast<std::size_t>(k)]);
  }
  return 0;
}

int cmd_train(const CommonFlags& flags, const std::string& model_name, bool grid) {
  RunConfig cfg = flags.load();
  const std::string dir = ensure_dir(resolve_out_dir(flags.out, cfg));
  const ModelKind kind = model_kind_from_string(model_name);
  const Dataset dataset = cfg.load_dataset();

  TrainConfig tc = cfg.train;
  if (grid) {
    const auto choice =
        run_grid_search(dataset, kind, cfg.specs, cfg.train, cfg.master_seed, cfg.workers);
    tc.optimizer = choice.optimizer;
    tc.learning_rate = choice.learning_rate;
    std::printf("grid search winner: %s lr=%g\n", to_string(choice.optimizer).c_str(),
                choice.learning_rate);
  }

  ExperimentConfig ec;
  ec.model = kind;
  ec.specs = cfg.specs;
  ec.protocol = Protocol::clean;
  ec.folds.kind = FoldPlan::Kind::single_split;
  ec.train = tc;
  ec.master_seed = cfg.master_seed;
  ec.workers = 1;
  std::vector<TrainedModel> models;
  const ExperimentResult result = run_experiment(ec, dataset, nullptr, &models);

  const std::string model_path = dir + "/model_" + to_string(kind) + ".txt";
  save_model(models.at(0), model_path);
  std::printf("trained %s: test accuracy %.4f (%zu epochs); saved %s\n", to_string(kind).c_str(),
              result.fold_accuracies.at(0), models.at(0).history.size(), model_path.c_str());
  return 0;
}

int cmd_sweep(const CommonFlags& flags, const std::string& models, const std::string& families,
              const std::string& levels, const std::string& protocols) {
  RunConfig cfg = flags.load();
  const std::string dir = ensure_dir(resolve_out_dir(flags.out, cfg));
  if (!models.empty()) cfg.axes.models = parse_model_list(models);
  if (!families.empty()) cfg.axes.families = parse_family_list(families);
  if (!levels.empty()) cfg.axes.levels = parse_level_list(levels);
  if (!protocols.empty()) cfg.axes.protocols = parse_protocol_list(protocols);

  const Dataset dataset = cfg.load_dataset();
  SweepConfig sc;
  sc.axes = cfg.axes;
  sc.specs = cfg.specs;
  sc.folds = cfg.folds;
  sc.train = cfg.train;
  sc.master_seed = cfg.master_seed;
  sc.workers = cfg.workers;
  sc.results_path = dir + "/results.jsonl";
  const SweepOutcome outcome = run_sweep(sc, dataset);
  std::printf("sweep complete: %zu cells (%zu computed, %zu reused) -> %s\n",
              outcome.records.size(), outcome.computed, outcome.reused, sc.results_path.c_str());
  return 0;
}

int cmd_report(const CommonFlags& flags) {
  RunConfig cfg = flags.load();
  const std::string dir = ensure_dir(resolve_out_dir(flags.out, cfg));
  const auto records = load_records(dir + "/results.jsonl");
  if (records.empty()) {
    throw std::runtime_error("report: no records in " + dir + "/results.jsonl (run sweep first)");
  }
  auto files = render_tables(records, dir);
  auto plots = render_plot_data(records, dir);
  files.insert(files.end(), plots.begin(), plots.end());
  for (const auto& f : files) std::printf("wrote %s\n", f.c_str());
  return 0;
}

int cmd_gradcheck(const CommonFlags& flags) {
  const std::uint64_t seed = flags.seed_set ? flags.seed : 20240101ULL;
  const GradCheckReport report = run_gradient_checks(seed);
  for (const auto& e : report.entries) {
    std::printf("%-24s max relative error %.3g\n", e.name.c_str(), e.max_rel_error);
  }
  std::printf("gradcheck max relative error: %.3g (tolerance 1e-4)\n", report.max_rel_error());
  return report.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"noisyarm: robot-arm action recognition robustness benchmark"};
  app.require_subcommand(1);

  CommonFlags flags;

  auto* generate_cmd = app.add_subcommand("generate", "write a synthetic dataset CSV");
  flags.attach(generate_cmd);

  std::string ingest_input;
  auto* ingest_cmd = app.add_subcommand("ingest", "validate and summarize a dataset CSV");
  flags.attach(ingest_cmd);
  ingest_cmd->add_option("--input", ingest_input, "dataset CSV path");

  std::string train_model = "cnn";
  bool train_grid = false;
  auto* train_cmd = app.add_subcommand("train", "train one model on a single 80/10/10 split");
  flags.attach(train_cmd);
  train_cmd->add_option("--model", train_model, "cnn | transformer | rocket");
  train_cmd->add_flag("--grid", train_grid, "run the optimizer/learning-rate grid search first");

  std::string sw_models, sw_families, sw_levels, sw_protocols;
  auto* sweep_cmd = app.add_subcommand("sweep", "run the noise/protocol/model sweep");
  flags.attach(sweep_cmd);
  sweep_cmd->add_option("--models", sw_models, "comma list: cnn,transformer,rocket");
  sweep_cmd->add_option("--families", sw_families, "comma list: cutout,salt_pepper,gaussian");
  sweep_cmd->add_option("--levels", sw_levels, "comma list: 10,20,30,40,50");
  sweep_cmd->add_option("--protocols", sw_protocols,
                        "comma list: train_only,test_only,train_and_test");

  auto* report_cmd = app.add_subcommand("report", "render tables and plot data from results");
  flags.attach(report_cmd);

  auto* gradcheck_cmd = app.add_subcommand("gradcheck", "run the finite-difference suite");
  flags.attach(gradcheck_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate_cmd->parsed()) return cmd_generate(flags);
    if (ingest_cmd->parsed()) return cmd_ingest(flags, ingest_input);
    if (train_cmd->parsed()) return cmd_train(flags, train_model, train_grid);
    if (sweep_cmd->parsed()) return cmd_sweep(flags, sw_models, sw_families, sw_levels,
                                              sw_protocols);
    if (report_cmd->parsed()) return cmd_report(flags);
    if (gradcheck_cmd->parsed()) return cmd_gradcheck(flags);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
