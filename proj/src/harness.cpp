#include "noisyarm/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <future>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "noisyarm/rng.hpp"
#include "noisyarm/scaler.hpp"

namespace noisyarm {

using nlohmann::json;

std::string to_string(Protocol protocol) {
  switch (protocol) {
    case Protocol::clean: return "clean";
    case Protocol::noise_train_only: return "train_only";
    case Protocol::noise_test_only: return "test_only";
    case Protocol::noise_train_and_test: return "train_and_test";
  }
  return "?";
}

Protocol protocol_from_string(const std::string& name) {
  if (name == "clean") return Protocol::clean;
  if (name == "train_only" || name == "train") return Protocol::noise_train_only;
  if (name == "test_only" || name == "test") return Protocol::noise_test_only;
  if (name == "train_and_test") return Protocol::noise_train_and_test;
  throw std::invalid_argument("unknown protocol: " + name);
}

void ExperimentConfig::validate() const {
  if ((protocol == Protocol::clean) != !noise.has_value()) {
    throw std::invalid_argument("experiment: clean protocol must (only) omit the noise spec");
  }
  if (noise) noise->validate();
  if (workers == 0) throw std::invalid_argument("experiment: workers must be positive");
}

double sample_stddev(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

std::uint64_t cell_seed(std::uint64_t master_seed, ModelKind model,
                        const std::optional<NoiseFamily>& family, int level, Protocol protocol,
                        std::size_t fold) {
  std::uint64_t s = mix_seed(master_seed, "cell");
  s = mix_seed(s, to_string(model));
  s = mix_seed(s, family ? to_string(*family) : "none");
  s = mix_seed(s, static_cast<std::uint64_t>(level));
  s = mix_seed(s, to_string(protocol));
  return mix_seed(s, fold);
}

namespace {

void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr error;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      {
        std::lock_guard<std::mutex> lock(err_mu);
        if (error) return;
      }
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  const std::size_t n = std::min(workers, count);
  threads.reserve(n);
  for (std::size_t i = 0; i < n; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

// Memoizes trainings shared between cells (e.g. the clean-trained model all
// test-only cells of a fold evaluate). Concurrent requests for one key wait
// on the first trainer.
class ModelCache {
 public:
  std::shared_ptr<const TrainedModel> get_or_train(
      const std::string& key, const std::function<TrainedModel()>& trainer) {
    std::shared_future<std::shared_ptr<const TrainedModel>> future;
    bool mine = false;
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = entries_.find(key);
      if (it == entries_.end()) {
        std::promise<std::shared_ptr<const TrainedModel>> promise;
        future = promise.get_future().share();
        entries_.emplace(key, future);
        promises_.emplace(key, std::move(promise));
        mine = true;
      } else {
        future = it->second;
      }
    }
    if (mine) {
      std::promise<std::shared_ptr<const TrainedModel>> promise;
      {
        std::lock_guard<std::mutex> lock(mu_);
        promise = std::move(promises_.at(key));
        promises_.erase(key);
      }
      try {
        promise.set_value(std::make_shared<TrainedModel>(trainer()));
      } catch (...) {
        promise.set_exception(std::current_exception());
      }
    }
    return future.get();
  }

 private:
  std::mutex mu_;
  std::map<std::string, std::shared_future<std::shared_ptr<const TrainedModel>>> entries_;
  std::map<std::string, std::promise<std::shared_ptr<const TrainedModel>>> promises_;
};

std::string train_noise_key(Protocol protocol, const std::optional<NoiseSpec>& noise) {
  switch (protocol) {
    case Protocol::clean:
    case Protocol::noise_test_only:
      return "clean";
    case Protocol::noise_train_only:
      return "augment:" + to_string(noise->family) + ":" + std::to_string(noise->level_percent);
    case Protocol::noise_train_and_test:
      return "replace:" + to_string(noise->family) + ":" + std::to_string(noise->level_percent);
  }
  return "?";
}

std::vector<const Series*> series_ptrs(const std::vector<Series>& v) {
  std::vector<const Series*> out;
  out.reserve(v.size());
  for (const auto& s : v) out.push_back(&s);
  return out;
}

// One fold of one cell: fit normalization on train, materialize partitions,
// inject noise per protocol, train (via cache when shared), then evaluate
// the test partition last.
double run_fold_cell(const Dataset& dataset, const SplitIndices& fold, std::size_t fold_index,
                     ModelKind model, const ModelSpecs& specs, Protocol protocol,
                     const std::optional<NoiseSpec>& noise, const TrainConfig& base_train,
                     std::uint64_t master_seed, AccessTracker* tracker, ModelCache* cache,
                     TrainedModel* out_model) {
  const std::string tn_key = train_noise_key(protocol, noise);
  std::uint64_t train_seed = mix_seed(master_seed, "train");
  train_seed = mix_seed(train_seed, to_string(model));
  train_seed = mix_seed(train_seed, fold_index);
  train_seed = mix_seed(train_seed, tn_key);

  if (tracker) tracker->on_read(PartitionTag::train, "fit_scaler");
  MinMaxScaler scaler;
  {
    std::vector<const Series*> fit;
    fit.reserve(fold.train.size());
    for (std::size_t i : fold.train) fit.push_back(&dataset.samples()[i].series);
    scaler.fit(fit);
  }

  auto trainer = [&]() -> TrainedModel {
    if (tracker) {
      tracker->on_read(PartitionTag::train, "prepare");
      tracker->on_read(PartitionTag::validation, "prepare");
    }
    std::vector<Series> train_x;
    std::vector<int> train_y;
    train_x.reserve(fold.train.size() * 2);
    for (std::size_t i : fold.train) {
      train_x.push_back(scaler.transform(dataset.samples()[i].series));
      train_y.push_back(dataset.samples()[i].label);
    }
    std::vector<Series> val_x;
    std::vector<int> val_y;
    val_x.reserve(fold.validation.size());
    for (std::size_t i : fold.validation) {
      val_x.push_back(scaler.transform(dataset.samples()[i].series));
      val_y.push_back(dataset.samples()[i].label);
    }
    if (protocol == Protocol::noise_train_only) {
      const std::size_t originals = train_x.size();
      for (std::size_t i = 0; i < originals; ++i) {
        NoiseSpec spec = *noise;
        spec.seed = mix_seed(mix_seed(train_seed, "train_noise"), i);
        train_x.push_back(apply(train_x[i], spec));
        train_y.push_back(train_y[i]);
      }
    } else if (protocol == Protocol::noise_train_and_test) {
      for (std::size_t i = 0; i < train_x.size(); ++i) {
        NoiseSpec spec = *noise;
        spec.seed = mix_seed(mix_seed(train_seed, "train_noise"), i);
        train_x[i] = apply(train_x[i], spec);
      }
      for (std::size_t i = 0; i < val_x.size(); ++i) {
        NoiseSpec spec = *noise;
        spec.seed = mix_seed(mix_seed(train_seed, "val_noise"), i);
        val_x[i] = apply(val_x[i], spec);
      }
    }
    TrainConfig tc = base_train;
    tc.seed = train_seed;
    try {
      return train(model, specs, series_ptrs(train_x), train_y, series_ptrs(val_x), val_y, tc);
    } catch (const TrainDivergence& e) {
      throw TrainDivergence("fold " + std::to_string(fold_index) + ": " + e.what(),
                            e.last_good_epoch);
    }
  };

  std::shared_ptr<const TrainedModel> trained;
  if (cache) {
    const std::string key = to_string(model) + "/" + std::to_string(fold_index) + "/" + tn_key;
    trained = cache->get_or_train(key, trainer);
  } else {
    trained = std::make_shared<TrainedModel>(trainer());
  }
  if (tracker) tracker->on_mark("training_complete");

  if (tracker) tracker->on_read(PartitionTag::test, "evaluate");
  std::vector<Series> test_x;
  std::vector<int> test_y;
  test_x.reserve(fold.test.size());
  for (std::size_t i : fold.test) {
    test_x.push_back(scaler.transform(dataset.samples()[i].series));
    test_y.push_back(dataset.samples()[i].label);
  }
  if (protocol == Protocol::noise_test_only || protocol == Protocol::noise_train_and_test) {
    const std::uint64_t cseed =
        cell_seed(master_seed, model, noise ? std::optional<NoiseFamily>(noise->family)
                                            : std::nullopt,
                  noise ? noise->level_percent : 0, protocol, fold_index);
    for (std::size_t i = 0; i < test_x.size(); ++i) {
      NoiseSpec spec = *noise;
      spec.seed = mix_seed(mix_seed(cseed, "test_noise"), i);
      test_x[i] = apply(test_x[i], spec);
    }
  }
  if (out_model) *out_model = *trained;
  return trained->accuracy(series_ptrs(test_x), test_y);
}

std::vector<SplitIndices> make_folds(const Dataset& dataset, const FoldPlan& plan,
                                     std::uint64_t master_seed) {
  const std::uint64_t seed = mix_seed(master_seed, "folds");
  if (plan.kind == FoldPlan::Kind::single_split) {
    return {split(dataset, plan.fractions, seed)};
  }
  return kfold(dataset, plan.k, seed);
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const Dataset& dataset,
                                AccessTracker* tracker, std::vector<TrainedModel>* out_models) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const auto folds = make_folds(dataset, cfg.folds, cfg.master_seed);

  ExperimentResult result;
  result.fold_accuracies.resize(folds.size());
  if (out_models) out_models->resize(folds.size());
  parallel_for(folds.size(), cfg.workers, [&](std::size_t f) {
    result.fold_accuracies[f] =
        run_fold_cell(dataset, folds[f], f, cfg.model, cfg.specs, cfg.protocol, cfg.noise,
                      cfg.train, cfg.master_seed, tracker, nullptr,
                      out_models ? &(*out_models)[f] : nullptr);
  });

  double mean = 0.0;
  for (double a : result.fold_accuracies) mean += a;
  result.mean = mean / static_cast<double>(result.fold_accuracies.size());
  result.stddev = sample_stddev(result.fold_accuracies);
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

GridSearchResult run_grid_search(const Dataset& dataset, ModelKind model, const ModelSpecs& specs,
                                 const TrainConfig& base, std::uint64_t master_seed,
                                 std::size_t workers) {
  const SplitIndices indices = split(dataset, {0.8, 0.1, 0.1}, mix_seed(master_seed, "grid_split"));

  MinMaxScaler scaler;
  {
    std::vector<const Series*> fit;
    for (std::size_t i : indices.train) fit.push_back(&dataset.samples()[i].series);
    scaler.fit(fit);
  }
  std::vector<Series> train_x, val_x;
  std::vector<int> train_y, val_y;
  for (std::size_t i : indices.train) {
    train_x.push_back(scaler.transform(dataset.samples()[i].series));
    train_y.push_back(dataset.samples()[i].label);
  }
  for (std::size_t i : indices.validation) {
    val_x.push_back(scaler.transform(dataset.samples()[i].series));
    val_y.push_back(dataset.samples()[i].label);
  }

  const OptimizerKind kinds[] = {OptimizerKind::adam, OptimizerKind::rmsprop, OptimizerKind::sgd};
  GridSearchResult result;
  result.cells.resize(9);
  parallel_for(9, workers, [&](std::size_t cell) {
    const std::size_t oi = cell / 3, li = cell % 3;
    GridCell& out = result.cells[cell];
    out.optimizer = kinds[oi];
    out.learning_rate = kLearningRateGrid[li];
    TrainConfig tc = base;
    tc.optimizer = out.optimizer;
    tc.learning_rate = out.learning_rate;
    tc.seed = mix_seed(mix_seed(mix_seed(master_seed, "grid"), to_string(out.optimizer)), li);
    try {
      const TrainedModel trained =
          train(model, specs, series_ptrs(train_x), train_y, series_ptrs(val_x), val_y, tc);
      out.val_accuracy = trained.accuracy(series_ptrs(val_x), val_y);
    } catch (const TrainDivergence&) {
      out.diverged = true;
      out.val_accuracy = -1.0;
    }
  });

  const GridCell* best = nullptr;
  auto rank = [](OptimizerKind k) {
    return k == OptimizerKind::adam ? 0 : (k == OptimizerKind::rmsprop ? 1 : 2);
  };
  for (const auto& cell : result.cells) {
    if (cell.diverged) continue;
    if (!best || cell.val_accuracy > best->val_accuracy ||
        (cell.val_accuracy == best->val_accuracy &&
         (cell.learning_rate < best->learning_rate ||
          (cell.learning_rate == best->learning_rate &&
           rank(cell.optimizer) < rank(best->optimizer))))) {
      best = &cell;
    }
  }
  if (!best) throw std::runtime_error("grid search: every cell diverged");
  result.optimizer = best->optimizer;
  result.learning_rate = best->learning_rate;
  return result;
}

std::string CellRecord::key() const {
  return to_string(model) + "|" + (family ? to_string(*family) : "none") + "|" +
         std::to_string(level) + "|" + to_string(protocol);
}

namespace {

int family_rank(const std::optional<NoiseFamily>& family) {
  if (!family) return -1;
  switch (*family) {
    case NoiseFamily::cutout: return 0;
    case NoiseFamily::salt_pepper: return 1;
    case NoiseFamily::gaussian: return 2;
  }
  return 3;
}

int protocol_rank(Protocol p) {
  switch (p) {
    case Protocol::clean: return 0;
    case Protocol::noise_train_only: return 1;
    case Protocol::noise_test_only: return 2;
    case Protocol::noise_train_and_test: return 3;
  }
  return 4;
}

int model_rank(ModelKind m) {
  switch (m) {
    case ModelKind::cnn: return 0;
    case ModelKind::transformer: return 1;
    case ModelKind::rocket: return 2;
  }
  return 3;
}

bool record_less(const CellRecord& a, const CellRecord& b) {
  const auto ka = std::make_tuple(model_rank(a.model), family_rank(a.family), a.level,
                                  protocol_rank(a.protocol));
  const auto kb = std::make_tuple(model_rank(b.model), family_rank(b.family), b.level,
                                  protocol_rank(b.protocol));
  return ka < kb;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string dataset_fingerprint(const Dataset& dataset) {
  std::ostringstream os;
  os << dataset.size() << "," << dataset.channels() << "," << dataset.timesteps();
  if (dataset.provenance().kind == Provenance::Kind::synthetic) {
    const auto& p = dataset.provenance().params;
    os << ",syn," << p.timesteps << "," << p.samples_per_class << "," << p.cameras << ","
       << p.keypoints << "," << p.jitter_std << "," << p.timing_jitter << "," << p.seed;
  } else {
    os << ",csv," << dataset.provenance().path;
  }
  std::uint64_t h = fnv1a(os.str());
  for (double v : dataset.samples().front().series.values()) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    h = mix_seed(h, bits);
  }
  return os.str();
}

std::string sweep_config_hash(const SweepConfig& cfg, const Dataset& dataset) {
  std::ostringstream os;
  os << "v1|seed=" << cfg.master_seed << "|folds=";
  if (cfg.folds.kind == FoldPlan::Kind::kfold) {
    os << "k" << cfg.folds.k;
  } else {
    os << cfg.folds.fractions[0] << "/" << cfg.folds.fractions[1] << "/"
       << cfg.folds.fractions[2];
  }
  os << "|train=" << cfg.train.batch_size << "," << cfg.train.max_iterations << ","
     << to_string(cfg.train.optimizer) << "," << cfg.train.learning_rate << ","
     << cfg.train.early_stopping_patience;
  os << "|cnn=" << cfg.specs.cnn.conv1_filters << "," << cfg.specs.cnn.conv2_filters << ","
     << cfg.specs.cnn.dense_hidden;
  os << "|tf=" << cfg.specs.transformer.heads << "," << cfg.specs.transformer.ffn_dim << ","
     << cfg.specs.transformer.blocks << "," << cfg.specs.transformer.model_dim;
  os << "|rocket=" << cfg.specs.rocket.num_kernels;
  os << "|region=" << cfg.axes.cutout_region;
  os << "|data=" << dataset_fingerprint(dataset);
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(os.str())));
  return buf;
}

}  // namespace

std::string record_to_json(const CellRecord& record) {
  json j;
  j["model"] = to_string(record.model);
  j["family"] = record.family ? to_string(*record.family) : "none";
  j["level"] = record.level;
  j["protocol"] = to_string(record.protocol);
  j["folds"] = record.fold_accuracies;
  j["mean"] = record.mean;
  j["std"] = record.stddev;
  j["runtime_ms"] = record.runtime_ms;
  j["config_hash"] = record.config_hash;
  return j.dump();
}

namespace {

CellRecord record_from_json(const json& j) {
  CellRecord r;
  r.model = model_kind_from_string(j.at("model").get<std::string>());
  const std::string family = j.at("family").get<std::string>();
  if (family != "none") r.family = noise_family_from_string(family);
  r.level = j.at("level").get<int>();
  r.protocol = protocol_from_string(j.at("protocol").get<std::string>());
  r.fold_accuracies = j.at("folds").get<std::vector<double>>();
  r.mean = j.at("mean").get<double>();
  r.stddev = j.at("std").get<double>();
  r.runtime_ms = j.at("runtime_ms").get<double>();
  r.config_hash = j.at("config_hash").get<std::string>();
  return r;
}

}  // namespace

std::vector<CellRecord> load_records(const std::string& path) {
  std::ifstream in(path);
  std::vector<CellRecord> out;
  if (!in) return out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(record_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error("results file " + path + " line " + std::to_string(line_no) +
                               ": " + e.what());
    }
  }
  return out;
}

void write_records(const std::string& path, std::vector<CellRecord> records) {
  std::sort(records.begin(), records.end(), record_less);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write results file " + path);
  for (const auto& r : records) out << record_to_json(r) << "\n";
  if (!out) throw std::runtime_error("write to results file " + path + " failed");
}

SweepOutcome run_sweep(const SweepConfig& cfg, const Dataset& dataset) {
  if (cfg.workers == 0) throw std::invalid_argument("sweep: workers must be positive");
  if (cfg.axes.models.empty() || cfg.axes.families.empty() || cfg.axes.levels.empty() ||
      cfg.axes.protocols.empty()) {
    throw std::invalid_argument("sweep: empty axis");
  }
  const std::string config_hash = sweep_config_hash(cfg, dataset);
  const auto folds = make_folds(dataset, cfg.folds, cfg.master_seed);

  struct Cell {
    ModelKind model;
    std::optional<NoiseFamily> family;
    int level = 0;
    Protocol protocol = Protocol::clean;
  };
  std::vector<Cell> cells;
  for (ModelKind model : cfg.axes.models) {
    if (cfg.axes.clean_baseline) cells.push_back({model, std::nullopt, 0, Protocol::clean});
    for (NoiseFamily family : cfg.axes.families) {
      for (int level : cfg.axes.levels) {
        for (Protocol protocol : cfg.axes.protocols) {
          if (protocol == Protocol::clean) continue;
          cells.push_back({model, family, level, protocol});
        }
      }
    }
  }

  std::map<std::string, CellRecord> done;
  if (!cfg.results_path.empty()) {
    for (auto& r : load_records(cfg.results_path)) {
      if (r.config_hash == config_hash) done.emplace(r.key(), std::move(r));
    }
  }

  struct Job {
    std::size_t cell;
    std::size_t fold;
  };
  std::vector<Job> jobs;
  std::vector<bool> cached(cells.size(), false);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    CellRecord probe;
    probe.model = cells[c].model;
    probe.family = cells[c].family;
    probe.level = cells[c].level;
    probe.protocol = cells[c].protocol;
    if (done.count(probe.key())) {
      cached[c] = true;
      continue;
    }
    for (std::size_t f = 0; f < folds.size(); ++f) jobs.push_back({c, f});
  }

  std::vector<std::vector<double>> fold_acc(cells.size(),
                                            std::vector<double>(folds.size(), 0.0));
  std::vector<std::vector<double>> fold_ms(cells.size(), std::vector<double>(folds.size(), 0.0));
  ModelCache cache;
  parallel_for(jobs.size(), cfg.workers, [&](std::size_t ji) {
    const Job& job = jobs[ji];
    const Cell& cell = cells[job.cell];
    std::optional<NoiseSpec> noise;
    if (cell.protocol != Protocol::clean) {
      NoiseSpec spec;
      spec.family = *cell.family;
      spec.level_percent = cell.level;
      spec.region_size = cfg.axes.cutout_region;
      noise = spec;
    }
    const auto t0 = std::chrono::steady_clock::now();
    fold_acc[job.cell][job.fold] =
        run_fold_cell(dataset, folds[job.fold], job.fold, cell.model, cfg.specs, cell.protocol,
                      noise, cfg.train, cfg.master_seed, nullptr, &cache, nullptr);
    fold_ms[job.cell][job.fold] =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  });

  SweepOutcome outcome;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    CellRecord r;
    r.model = cells[c].model;
    r.family = cells[c].family;
    r.level = cells[c].level;
    r.protocol = cells[c].protocol;
    r.config_hash = config_hash;
    if (cached[c]) {
      r = done.at(r.key());
      ++outcome.reused;
    } else {
      r.fold_accuracies = fold_acc[c];
      double mean = 0.0;
      for (double a : r.fold_accuracies) mean += a;
      r.mean = mean / static_cast<double>(r.fold_accuracies.size());
      r.stddev = sample_stddev(r.fold_accuracies);
      for (double ms : fold_ms[c]) r.runtime_ms += ms;
      ++outcome.computed;
    }
    outcome.records.push_back(std::move(r));
  }
  std::sort(outcome.records.begin(), outcome.records.end(), record_less);
  if (!cfg.results_path.empty()) write_records(cfg.results_path, outcome.records);
  return outcome;
}

}  // namespace noisyarm
