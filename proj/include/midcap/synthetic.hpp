#pragma once

#include <cstdint>
#include <string>

#include "midcap/dates.hpp"

namespace midcap {

struct SynthParams {
  int n_stocks = 500;
  int n_months = 132;  // 2013-01 .. 2023-12 at the default start
  Date start{2013, 1, 1};
  std::uint64_t seed = 42;
  // Scales the planted feature->return coefficients; 0 produces a panel
  // whose returns carry no recoverable signal.
  double signal_scale = 1.0;
  std::string out_dir = ".";
};

struct SynthSummary {
  std::size_t crsp_rows = 0;
  std::size_t compustat_rows = 0;
  std::size_t link_rows = 0;
  std::size_t sentiment_rows = 0;
  std::size_t benchmark_rows = 0;
};

// Writes crsp.csv, compustat.csv, links.csv, sentiment.csv,
// benchmark.csv and a ready-to-run config.cfg into out_dir.
// Deterministic: the same params produce byte-identical files.
SynthSummary generate_synthetic(const SynthParams& params);

}  // namespace midcap
