#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "noisyarm/noise.hpp"
#include "noisyarm/series.hpp"
#include "noisyarm/splits.hpp"
#include "noisyarm/train.hpp"

namespace noisyarm {

// Where noise sits relative to training: train-only augments the training
// set (originals kept), test-only corrupts the test set, train-and-test
// corrupts every partition; clean is the no-noise baseline.
enum class Protocol { clean, noise_train_only, noise_test_only, noise_train_and_test };

std::string to_string(Protocol protocol);
Protocol protocol_from_string(const std::string& name);

struct FoldPlan {
  enum class Kind { single_split, kfold };
  Kind kind = Kind::kfold;
  std::array<double, 3> fractions{0.8, 0.1, 0.1};  // single_split only
  std::size_t k = 5;                               // kfold only
};

struct ExperimentConfig {
  ModelKind model = ModelKind::cnn;
  ModelSpecs specs;
  std::optional<NoiseSpec> noise;  // absent iff protocol == clean
  Protocol protocol = Protocol::clean;
  FoldPlan folds;
  TrainConfig train;
  std::uint64_t master_seed = 1;
  std::size_t workers = 1;  // fold-level parallelism

  void validate() const;
};

struct ExperimentResult {
  std::vector<double> fold_accuracies;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation over folds
  double wall_seconds = 0.0;
};

// Observer for the no-leakage instrumentation: every code path that reads a
// partition's sample values reports here before doing so.
enum class PartitionTag { train, validation, test };

class AccessTracker {
 public:
  virtual ~AccessTracker() = default;
  virtual void on_read(PartitionTag partition, const char* stage) = 0;
  virtual void on_mark(const char* marker) = 0;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg, const Dataset& dataset,
                                AccessTracker* tracker = nullptr,
                                std::vector<TrainedModel>* out_models = nullptr);

struct GridCell {
  OptimizerKind optimizer = OptimizerKind::adam;
  double learning_rate = 0.0;
  double val_accuracy = -1.0;
  bool diverged = false;
};

struct GridSearchResult {
  OptimizerKind optimizer = OptimizerKind::adam;
  double learning_rate = 0.001;
  std::vector<GridCell> cells;  // all 9, in evaluation order
};

// 3 optimizers x 3 learning rates on the 80/10/10 split; best validation
// accuracy wins, ties -> lowest rate, then adam < rmsprop < sgd.
GridSearchResult run_grid_search(const Dataset& dataset, ModelKind model, const ModelSpecs& specs,
                                 const TrainConfig& base, std::uint64_t master_seed,
                                 std::size_t workers = 1);

// One persisted sweep cell. Clean baselines carry family "none", level 0.
struct CellRecord {
  ModelKind model = ModelKind::cnn;
  std::optional<NoiseFamily> family;
  int level = 0;
  Protocol protocol = Protocol::clean;
  std::vector<double> fold_accuracies;
  double mean = 0.0;
  double stddev = 0.0;
  double runtime_ms = 0.0;  // metadata; excluded from determinism comparisons
  std::string config_hash;

  std::string key() const;
};

struct SweepAxes {
  std::vector<ModelKind> models{ModelKind::cnn, ModelKind::transformer, ModelKind::rocket};
  std::vector<NoiseFamily> families{NoiseFamily::cutout, NoiseFamily::salt_pepper,
                                    NoiseFamily::gaussian};
  std::vector<int> levels{10, 20, 30, 40, 50};
  std::vector<Protocol> protocols{Protocol::noise_train_only, Protocol::noise_test_only,
                                  Protocol::noise_train_and_test};
  bool clean_baseline = true;
  std::size_t cutout_region = 10;
};

struct SweepConfig {
  SweepAxes axes;
  ModelSpecs specs;
  FoldPlan folds;
  TrainConfig train;
  std::uint64_t master_seed = 1;
  std::size_t workers = 1;
  std::string results_path;  // line-delimited records; resumable when non-empty
};

struct SweepOutcome {
  std::vector<CellRecord> records;  // canonical order, completed cells included
  std::size_t computed = 0;
  std::size_t reused = 0;
};

// Cartesian product of the axes with per-cell derived seeds. Cells already
// persisted with a matching config hash are skipped; the records file is
// rewritten in canonical order on completion.
SweepOutcome run_sweep(const SweepConfig& cfg, const Dataset& dataset);

std::vector<CellRecord> load_records(const std::string& path);
void write_records(const std::string& path, std::vector<CellRecord> records);
std::string record_to_json(const CellRecord& record);

// Pure function of the master seed and cell coordinates.
std::uint64_t cell_seed(std::uint64_t master_seed, ModelKind model,
                        const std::optional<NoiseFamily>& family, int level, Protocol protocol,
                        std::size_t fold);

double sample_stddev(const std::vector<double>& xs);

}  // namespace noisyarm
