#pragma once

#include <string>

#include "noisyarm/series.hpp"

namespace noisyarm {

// Layout: header `sample_id,label,channel,t0,...,t{T-1}`, one row per
// (sample, channel), channels in identical order for every sample, UTF-8,
// '.' decimal point.
void export_csv(const Dataset& dataset, const std::string& path);
Dataset ingest_csv(const std::string& path);

}  // namespace noisyarm
