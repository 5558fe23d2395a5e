#pragma once

#include <string>

#include "noisyarm/harness.hpp"

namespace noisyarm {

// Everything a run needs: dataset source, sweep axes, training overrides,
// output directory, master seed, workers. Populated from a line-based
// key=value file with [sections], then overridden by CLI flags.
struct RunConfig {
  enum class Source { generate, ingest };
  Source source = Source::generate;
  std::string ingest_path;
  GeneratorParams generator;

  SweepAxes axes;
  ModelSpecs specs;
  FoldPlan folds;
  TrainConfig train;
  std::uint64_t master_seed = 1;
  std::size_t workers = 1;
  std::string out_dir;  // empty -> NOISYARM_OUT -> "out"

  Dataset load_dataset() const;
};

RunConfig load_run_config(const std::string& path);

// Applies one `key = value` under a section; throws on unknown keys/values.
void apply_config_entry(RunConfig& cfg, const std::string& section, const std::string& key,
                        const std::string& value);

// Comma-separated list parsers shared by the config file and CLI flags.
std::vector<ModelKind> parse_model_list(const std::string& csv);
std::vector<NoiseFamily> parse_family_list(const std::string& csv);
std::vector<int> parse_level_list(const std::string& csv);
std::vector<Protocol> parse_protocol_list(const std::string& csv);

}  // namespace noisyarm
