#include "noisyarm/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>

namespace noisyarm {

namespace {

constexpr int kLevels[] = {10, 20, 30, 40, 50};
constexpr NoiseFamily kFamilies[] = {NoiseFamily::cutout, NoiseFamily::salt_pepper,
                                     NoiseFamily::gaussian};
constexpr Protocol kColumns[] = {Protocol::noise_train_only, Protocol::noise_test_only,
                                 Protocol::noise_train_and_test};
constexpr const char* kMissing = "—";

std::string family_display(NoiseFamily f) {
  switch (f) {
    case NoiseFamily::cutout: return "Cut-out";
    case NoiseFamily::salt_pepper: return "Salt & Pepper";
    case NoiseFamily::gaussian: return "Gaussian";
  }
  return "?";
}

std::string model_display(ModelKind m) {
  switch (m) {
    case ModelKind::cnn: return "CNN";
    case ModelKind::transformer: return "Transformer";
    case ModelKind::rocket: return "Rocket";
  }
  return "?";
}

}  // namespace

std::string format_percent(double fraction) {
  // nearbyint under the default rounding mode is round-half-to-even.
  const double rounded = std::nearbyint(fraction * 1000.0) / 10.0;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", rounded);
  return buf;
}

std::string format_mean_std_percent(double mean_fraction, double std_fraction) {
  return format_percent(mean_fraction) + "±" + format_percent(std_fraction);
}

namespace {

struct RecordIndex {
  // key: model | family | level | protocol
  std::map<std::string, const CellRecord*> cells;
  std::vector<ModelKind> models;  // canonical order, present only

  explicit RecordIndex(const std::vector<CellRecord>& records) {
    for (const auto& r : records) cells[r.key()] = &r;
    for (ModelKind m : {ModelKind::cnn, ModelKind::transformer, ModelKind::rocket}) {
      for (const auto& r : records) {
        if (r.model == m) {
          models.push_back(m);
          break;
        }
      }
    }
  }

  const CellRecord* find(ModelKind model, NoiseFamily family, int level,
                         Protocol protocol) const {
    CellRecord probe;
    probe.model = model;
    probe.family = family;
    probe.level = level;
    probe.protocol = protocol;
    auto it = cells.find(probe.key());
    return it == cells.end() ? nullptr : it->second;
  }

  const CellRecord* find_clean(ModelKind model) const {
    CellRecord probe;
    probe.model = model;
    probe.level = 0;
    probe.protocol = Protocol::clean;
    auto it = cells.find(probe.key());
    return it == cells.end() ? nullptr : it->second;
  }
};

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("report: cannot write " + path);
  return out;
}

}  // namespace

std::vector<std::string> render_tables(const std::vector<CellRecord>& records,
                                       const std::string& out_dir) {
  if (records.empty()) throw std::invalid_argument("report: no records");
  RecordIndex index(records);
  std::vector<std::string> files;
  for (ModelKind model : index.models) {
    const std::string md_path = out_dir + "/report_" + to_string(model) + ".md";
    const std::string csv_path = out_dir + "/report_" + to_string(model) + ".csv";
    auto md = open_out(md_path);
    auto csv = open_out(csv_path);

    md << "# " << model_display(model) << " accuracy under noise (%, mean±std over folds)\n\n";
    if (const CellRecord* clean = index.find_clean(model)) {
      md << "Clean baseline: " << format_mean_std_percent(clean->mean, clean->stddev) << "\n\n";
    }
    md << "| Noise | Noise type | Train | Test | Train & Test |\n";
    md << "|---|---|---|---|---|\n";
    csv << "level,family,train,test,train_and_test\n";
    for (int level : kLevels) {
      for (NoiseFamily family : kFamilies) {
        md << "| " << level << " | " << family_display(family) << " |";
        csv << level << "," << family_display(family);
        for (Protocol protocol : kColumns) {
          const CellRecord* r = index.find(model, family, level, protocol);
          const std::string cell = r ? format_mean_std_percent(r->mean, r->stddev) : kMissing;
          md << " " << cell << " |";
          csv << "," << cell;
        }
        md << "\n";
        csv << "\n";
      }
    }
    files.push_back(md_path);
    files.push_back(csv_path);
  }
  return files;
}

std::vector<std::string> render_plot_data(const std::vector<CellRecord>& records,
                                          const std::string& out_dir) {
  if (records.empty()) throw std::invalid_argument("report: no records");
  RecordIndex index(records);
  std::vector<std::string> files;
  for (NoiseFamily family : kFamilies) {
    for (Protocol protocol : kColumns) {
      const std::string path =
          out_dir + "/plot_" + to_string(family) + "_" + to_string(protocol) + ".csv";
      auto out = open_out(path);
      out << "level";
      for (ModelKind m : index.models) out << "," << to_string(m);
      out << "\n";
      for (int level : kLevels) {
        out << level;
        for (ModelKind m : index.models) {
          const CellRecord* r = index.find(m, family, level, protocol);
          out << "," << (r ? format_percent(r->mean) : kMissing);
        }
        out << "\n";
      }
      files.push_back(path);
    }
  }
  return files;
}

}  // namespace noisyarm
