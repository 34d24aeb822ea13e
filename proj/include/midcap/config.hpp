#pragma once

#include <cstdint>
#include <string>

#include "midcap/dates.hpp"

namespace midcap {

// Flat key=value configuration. The key set is closed: an unrecognized
// key is an error, which catches silent typos in threshold names.
struct Config {
  // Input paths; sentiment and benchmark may be empty (absent).
  std::string crsp;
  std::string compustat;
  std::string links;
  std::string sentiment;
  std::string benchmark;

  double midcap_min = 2e9;
  double midcap_max = 10e9;
  double risk_aversion = 2.0;
  double z_clip = 3.0;
  double vif_threshold = 10.0;
  double corr_threshold = 0.8;
  int cov_window_months = 36;
  double shrinkage = 0.1;
  double ridge_mu = 1e-3;
  double gross_target = 1.0;
  double max_weight = 0.0;  // per-name cap; 0 disables it

  Date train_start{2013, 1, 1};
  Date train_end{2021, 12, 31};
  Date validate_start{2022, 1, 1};
  Date validate_end{2022, 12, 31};
  Date test_start{2023, 1, 1};
  Date test_end{2023, 12, 31};

  std::uint64_t seed = 42;
};

// Parses `key = value` lines ('#' starts a comment). Unknown keys and
// malformed values throw; missing keys keep their defaults. The parsed
// config is validated before being returned.
Config load_config(const std::string& path);
Config parse_config_text(const std::string& text, const std::string& origin = "<string>");

// Threshold positivity and phase-window ordering checks.
void validate_config(const Config& config);

// Round-trips through parse_config_text to the identical Config.
std::string serialize_config(const Config& config);

}  // namespace midcap
