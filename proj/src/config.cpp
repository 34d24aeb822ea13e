#include "midcap/config.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "midcap/csv.hpp"
#include "midcap/errors.hpp"

namespace midcap {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

using Setter = std::function<void(Config&, const std::string&, const std::string&)>;

double parse_cfg_double(const std::string& v, const std::string& where) {
  try {
    return csv::parse_double(v, where, 0, "value");
  } catch (const ParseError&) {
    throw ConfigError(where + ": expected a number, got '" + v + "'");
  }
}

std::map<std::string, Setter> make_setters() {
  std::map<std::string, Setter> m;
  auto str = [](std::string Config::* f) {
    return [f](Config& c, const std::string& v, const std::string&) { c.*f = v; };
  };
  auto num = [](double Config::* f) {
    return [f](Config& c, const std::string& v, const std::string& w) {
      c.*f = parse_cfg_double(v, w);
    };
  };
  auto date = [](Date Config::* f) {
    return [f](Config& c, const std::string& v, const std::string& w) {
      try {
        c.*f = Date::parse(v);
      } catch (const ParseError& e) {
        throw ConfigError(w + ": " + e.what());
      }
    };
  };
  m["crsp"] = str(&Config::crsp);
  m["compustat"] = str(&Config::compustat);
  m["links"] = str(&Config::links);
  m["sentiment"] = str(&Config::sentiment);
  m["benchmark"] = str(&Config::benchmark);
  m["midcap_min"] = num(&Config::midcap_min);
  m["midcap_max"] = num(&Config::midcap_max);
  m["risk_aversion"] = num(&Config::risk_aversion);
  m["z_clip"] = num(&Config::z_clip);
  m["vif_threshold"] = num(&Config::vif_threshold);
  m["corr_threshold"] = num(&Config::corr_threshold);
  m["cov_window_months"] = [](Config& c, const std::string& v, const std::string& w) {
    double d = parse_cfg_double(v, w);
    c.cov_window_months = static_cast<int>(d);
    if (static_cast<double>(c.cov_window_months) != d)
      throw ConfigError(w + ": cov_window_months must be an integer");
  };
  m["shrinkage"] = num(&Config::shrinkage);
  m["ridge_mu"] = num(&Config::ridge_mu);
  m["gross_target"] = num(&Config::gross_target);
  m["max_weight"] = num(&Config::max_weight);
  m["train_start"] = date(&Config::train_start);
  m["train_end"] = date(&Config::train_end);
  m["validate_start"] = date(&Config::validate_start);
  m["validate_end"] = date(&Config::validate_end);
  m["test_start"] = date(&Config::test_start);
  m["test_end"] = date(&Config::test_end);
  m["seed"] = [](Config& c, const std::string& v, const std::string& w) {
    try {
      c.seed = static_cast<std::uint64_t>(csv::parse_int(v, w, 0, "seed"));
    } catch (const ParseError&) {
      throw ConfigError(w + ": expected an integer seed, got '" + v + "'");
    }
  };
  return m;
}

}  // namespace

Config parse_config_text(const std::string& text, const std::string& origin) {
  static const std::map<std::string, Setter> setters = make_setters();
  Config config;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    std::string where = origin + " line " + std::to_string(line_no);
    if (eq == std::string::npos)
      throw ConfigError(where + ": expected 'key = value', got '" + line + "'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError(where + ": unknown config key '" + key + "'");
    it->second(config, value, where);
  }
  validate_config(config);
  return config;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  Config config = parse_config_text(ss.str(), path);

  // Relative data paths are taken relative to the config file, so a
  // generated fixture directory works from any working directory.
  std::filesystem::path base = std::filesystem::path(path).parent_path();
  auto resolve = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).string();
  };
  resolve(config.crsp);
  resolve(config.compustat);
  resolve(config.links);
  resolve(config.sentiment);
  resolve(config.benchmark);
  return config;
}

void validate_config(const Config& c) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw ConfigError(std::string(name) + " must be positive");
  };
  positive(c.midcap_min, "midcap_min");
  positive(c.risk_aversion, "risk_aversion");
  positive(c.z_clip, "z_clip");
  positive(c.vif_threshold, "vif_threshold");
  positive(c.corr_threshold, "corr_threshold");
  positive(c.gross_target, "gross_target");
  if (c.midcap_max < c.midcap_min) throw ConfigError("midcap_max below midcap_min");
  if (c.cov_window_months < 2) throw ConfigError("cov_window_months must be >= 2");
  if (c.shrinkage < 0.0 || c.shrinkage > 1.0) throw ConfigError("shrinkage must lie in [0, 1]");
  if (c.ridge_mu < 0.0) throw ConfigError("ridge_mu must be >= 0");
  if (c.max_weight < 0.0) throw ConfigError("max_weight must be >= 0 (0 disables the cap)");

  auto ordered = [](const Date& a, const Date& b, const char* msg) {
    if (b < a) throw ConfigError(msg);
  };
  ordered(c.train_start, c.train_end, "train window ends before it starts");
  ordered(c.validate_start, c.validate_end, "validate window ends before it starts");
  ordered(c.test_start, c.test_end, "test window ends before it starts");
  // Phases may not overlap at month granularity: the walk-forward
  // protocol needs train < validate < test.
  if (c.validate_start.month_index() <= c.train_end.month_index())
    throw ConfigError("validate window must start after the train window ends");
  if (c.test_start.month_index() <= c.validate_end.month_index())
    throw ConfigError("test window must start after the validate window ends");
}

std::string serialize_config(const Config& c) {
  std::ostringstream out;
  auto put = [&](const char* key, const std::string& value) {
    out << key << " = " << value << '\n';
  };
  put("crsp", c.crsp);
  put("compustat", c.compustat);
  put("links", c.links);
  put("sentiment", c.sentiment);
  put("benchmark", c.benchmark);
  put("midcap_min", csv::format_double(c.midcap_min));
  put("midcap_max", csv::format_double(c.midcap_max));
  put("risk_aversion", csv::format_double(c.risk_aversion));
  put("z_clip", csv::format_double(c.z_clip));
  put("vif_threshold", csv::format_double(c.vif_threshold));
  put("corr_threshold", csv::format_double(c.corr_threshold));
  put("cov_window_months", std::to_string(c.cov_window_months));
  put("shrinkage", csv::format_double(c.shrinkage));
  put("ridge_mu", csv::format_double(c.ridge_mu));
  put("gross_target", csv::format_double(c.gross_target));
  put("max_weight", csv::format_double(c.max_weight));
  put("train_start", c.train_start.to_string());
  put("train_end", c.train_end.to_string());
  put("validate_start", c.validate_start.to_string());
  put("validate_end", c.validate_end.to_string());
  put("test_start", c.test_start.to_string());
  put("test_end", c.test_end.to_string());
  put("seed", std::to_string(c.seed));
  return out.str();
}

}  // namespace midcap
