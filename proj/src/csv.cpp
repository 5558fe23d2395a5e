#include "noisyarm/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

namespace noisyarm {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

[[noreturn]] void fail(const std::string& path, std::size_t row, const std::string& msg) {
  throw std::runtime_error("ingest_csv: " + path + ": row " + std::to_string(row) + ": " + msg);
}

}  // namespace

void export_csv(const Dataset& dataset, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("export_csv: cannot open " + path);
  const std::size_t t_count = dataset.timesteps();
  std::fputs("sample_id,label,channel", f);
  for (std::size_t t = 0; t < t_count; ++t) std::fprintf(f, ",t%zu", t);
  std::fputc('\n', f);
  char buf[40];
  for (const auto& sample : dataset.samples()) {
    for (std::size_t c = 0; c < sample.series.channels(); ++c) {
      std::fprintf(f, "%s,%d,%s", sample.sample_id.c_str(), sample.label,
                   sample.series.channel_names()[c].c_str());
      const double* row = sample.series.channel(c);
      for (std::size_t t = 0; t < t_count; ++t) {
        std::snprintf(buf, sizeof(buf), ",%.17g", row[t]);
        std::fputs(buf, f);
      }
      std::fputc('\n', f);
    }
  }
  if (std::fclose(f) != 0) throw std::runtime_error("export_csv: write to " + path + " failed");
}

Dataset ingest_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("ingest_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("ingest_csv: " + path + ": missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = split_fields(line);
  if (header.size() < 4 || header[0] != "sample_id" || header[1] != "label" ||
      header[2] != "channel") {
    throw std::runtime_error("ingest_csv: " + path +
                             ": missing header (expected sample_id,label,channel,t0,...)");
  }
  const std::size_t t_count = header.size() - 3;

  struct PendingSample {
    int label = -1;
    std::vector<std::string> channel_names;
    std::vector<double> values;
  };
  std::vector<std::string> order;
  std::unordered_map<std::string, PendingSample> pending;

  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      fail(path, row_no, "expected " + std::to_string(header.size()) + " fields, got " +
                             std::to_string(fields.size()));
    }
    const std::string& sid = fields[0];
    int label = 0;
    {
      auto [p, ec] = std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(), label);
      if (ec != std::errc() || p != fields[1].data() + fields[1].size()) {
        fail(path, row_no, "unreadable label '" + fields[1] + "'");
      }
    }
    if (label < 0 || label >= kNumClasses) {
      fail(path, row_no,
           "sample '" + sid + "' has label " + std::to_string(label) + " outside [0,8]");
    }
    auto [it, inserted] = pending.try_emplace(sid);
    if (inserted) order.push_back(sid);
    PendingSample& ps = it->second;
    if (ps.label >= 0 && ps.label != label) {
      fail(path, row_no, "sample '" + sid + "' has conflicting labels");
    }
    ps.label = label;
    ps.channel_names.push_back(fields[2]);
    for (std::size_t t = 0; t < t_count; ++t) {
      const std::string& cell = fields[3 + t];
      double v = 0.0;
      auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || p != cell.data() + cell.size()) {
        fail(path, row_no, "unreadable number '" + cell + "' in column t" + std::to_string(t));
      }
      ps.values.push_back(v);
    }
  }
  if (order.empty()) throw std::runtime_error("ingest_csv: " + path + ": no data rows");

  const std::vector<std::string>* reference_channels = nullptr;
  std::vector<LabeledSample> samples;
  samples.reserve(order.size());
  for (const auto& sid : order) {
    PendingSample& ps = pending[sid];
    if (!reference_channels) {
      reference_channels = &pending[order[0]].channel_names;
    } else if (ps.channel_names != *reference_channels) {
      throw std::runtime_error("ingest_csv: " + path + ": sample '" + sid +
                               "' channel set/order differs from sample '" + order[0] + "'");
    }
    LabeledSample sample;
    sample.series =
        Series(ps.channel_names.size(), t_count, std::move(ps.values), ps.channel_names);
    sample.label = ps.label;
    sample.sample_id = sid;
    samples.push_back(std::move(sample));
  }

  Provenance prov;
  prov.kind = Provenance::Kind::ingested;
  prov.path = path;
  return Dataset(std::move(samples), default_class_names(), std::move(prov));
}

}  // namespace noisyarm
