#include "noisyarm/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "noisyarm/csv.hpp"
#include "noisyarm/generator.hpp"

namespace noisyarm {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::uint64_t parse_u64(const std::string& v, const std::string& key) {
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: " + key + ": expected integer, got '" + v + "'");
  }
}

double parse_double(const std::string& v, const std::string& key) {
  try {
    return std::stod(v);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: " + key + ": expected number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("config: " + key + ": expected boolean, got '" + v + "'");
}

}  // namespace

std::vector<ModelKind> parse_model_list(const std::string& csv) {
  std::vector<ModelKind> out;
  for (const auto& item : split_csv(csv)) out.push_back(model_kind_from_string(item));
  if (out.empty()) throw std::invalid_argument("empty model list");
  return out;
}

std::vector<NoiseFamily> parse_family_list(const std::string& csv) {
  std::vector<NoiseFamily> out;
  for (const auto& item : split_csv(csv)) out.push_back(noise_family_from_string(item));
  if (out.empty()) throw std::invalid_argument("empty family list");
  return out;
}

std::vector<int> parse_level_list(const std::string& csv) {
  std::vector<int> out;
  for (const auto& item : split_csv(csv)) out.push_back(static_cast<int>(parse_u64(item, "level")));
  if (out.empty()) throw std::invalid_argument("empty level list");
  return out;
}

std::vector<Protocol> parse_protocol_list(const std::string& csv) {
  std::vector<Protocol> out;
  for (const auto& item : split_csv(csv)) out.push_back(protocol_from_string(item));
  if (out.empty()) throw std::invalid_argument("empty protocol list");
  return out;
}

void apply_config_entry(RunConfig& cfg, const std::string& section, const std::string& key,
                        const std::string& value) {
  const std::string full = section.empty() ? key : section + "." + key;
  if (section == "dataset") {
    if (key == "source") {
      if (value == "generate") {
        cfg.source = RunConfig::Source::generate;
      } else if (value == "ingest") {
        cfg.source = RunConfig::Source::ingest;
      } else {
        throw std::invalid_argument("config: dataset.source must be generate|ingest");
      }
    } else if (key == "path") {
      cfg.ingest_path = value;
    } else if (key == "timesteps") {
      cfg.generator.timesteps = parse_u64(value, full);
    } else if (key == "samples_per_class") {
      cfg.generator.samples_per_class = parse_u64(value, full);
    } else if (key == "cameras") {
      cfg.generator.cameras = parse_u64(value, full);
    } else if (key == "keypoints") {
      cfg.generator.keypoints = parse_u64(value, full);
    } else if (key == "jitter_std") {
      cfg.generator.jitter_std = parse_double(value, full);
    } else if (key == "timing_jitter") {
      cfg.generator.timing_jitter = parse_double(value, full);
    } else if (key == "seed") {
      cfg.generator.seed = parse_u64(value, full);
    } else {
      throw std::invalid_argument("config: unknown key " + full);
    }
  } else if (section == "train") {
    if (key == "batch_size") {
      cfg.train.batch_size = parse_u64(value, full);
    } else if (key == "max_iterations") {
      cfg.train.max_iterations = parse_u64(value, full);
    } else if (key == "optimizer") {
      cfg.train.optimizer = optimizer_from_string(value);
    } else if (key == "learning_rate") {
      cfg.train.learning_rate = parse_double(value, full);
    } else if (key == "patience") {
      cfg.train.early_stopping_patience = parse_u64(value, full);
    } else {
      throw std::invalid_argument("config: unknown key " + full);
    }
  } else if (section == "rocket") {
    if (key == "num_kernels") {
      cfg.specs.rocket.num_kernels = parse_u64(value, full);
    } else {
      throw std::invalid_argument("config: unknown key " + full);
    }
  } else if (section == "sweep" || section == "run") {
    if (key == "models") {
      cfg.axes.models = parse_model_list(value);
    } else if (key == "families") {
      cfg.axes.families = parse_family_list(value);
    } else if (key == "levels") {
      cfg.axes.levels = parse_level_list(value);
    } else if (key == "protocols") {
      cfg.axes.protocols = parse_protocol_list(value);
    } else if (key == "clean_baseline") {
      cfg.axes.clean_baseline = parse_bool(value, full);
    } else if (key == "cutout_region") {
      cfg.axes.cutout_region = parse_u64(value, full);
    } else if (key == "folds") {
      if (value.rfind("kfold:", 0) == 0) {
        cfg.folds.kind = FoldPlan::Kind::kfold;
        cfg.folds.k = parse_u64(value.substr(6), full);
      } else if (value.rfind("split:", 0) == 0) {
        const auto parts = split_csv(value.substr(6));
        if (parts.size() != 3) {
          throw std::invalid_argument("config: folds split needs 3 fractions");
        }
        cfg.folds.kind = FoldPlan::Kind::single_split;
        for (int i = 0; i < 3; ++i) cfg.folds.fractions[i] = parse_double(parts[i], full);
      } else {
        throw std::invalid_argument("config: folds must be kfold:K or split:a,b,c");
      }
    } else if (key == "master_seed") {
      cfg.master_seed = parse_u64(value, full);
    } else if (key == "workers") {
      cfg.workers = parse_u64(value, full);
    } else if (key == "out") {
      cfg.out_dir = value;
    } else {
      throw std::invalid_argument("config: unknown key " + full);
    }
  } else {
    throw std::invalid_argument("config: unknown section [" + section + "]");
  }
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  RunConfig cfg;
  std::string line, section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config: " + path + " line " + std::to_string(line_no) +
                                  ": expected key = value");
    }
    try {
      apply_config_entry(cfg, section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const std::exception& e) {
      throw std::invalid_argument(path + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

Dataset RunConfig::load_dataset() const {
  if (source == Source::ingest) {
    if (ingest_path.empty()) throw std::invalid_argument("config: dataset.path required for ingest");
    return ingest_csv(ingest_path);
  }
  return generate(generator);
}

}  // namespace noisyarm
