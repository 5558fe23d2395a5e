#pragma once

#include <string>
#include <vector>

#include "noisyarm/harness.hpp"

namespace noisyarm {

// "97.8±1.6": percentages at one decimal, round-half-to-even.
std::string format_percent(double fraction);
std::string format_mean_std_percent(double mean_fraction, double std_fraction);

// Per-model tables (markdown + CSV), rows keyed by (level, family), columns
// Train / Test / Train & Test; missing cells render as an em dash. Returns
// the written file paths. Pure function of the records.
std::vector<std::string> render_tables(const std::vector<CellRecord>& records,
                                       const std::string& out_dir);

// One CSV per (family, protocol): rows = levels ascending, columns = models;
// values are the same formatted means the tables show.
std::vector<std::string> render_plot_data(const std::vector<CellRecord>& records,
                                          const std::string& out_dir);

}  // namespace noisyarm
