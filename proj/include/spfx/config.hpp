#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "spfx/errors.hpp"
#include "spfx/trainer.hpp"

namespace spfx {

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &pos);
  } catch (const std::exception&) {
    throw config_error("bad numeric value for " + key + ": '" + value + "'");
  }
  if (pos != value.size()) throw config_error("bad numeric value for " + key + ": '" + value + "'");
  return v;
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  std::uint64_t v = 0;
  try {
    v = std::stoull(value, &pos);
  } catch (const std::exception&) {
    throw config_error("bad integer value for " + key + ": '" + value + "'");
  }
  if (pos != value.size()) throw config_error("bad integer value for " + key + ": '" + value + "'");
  return v;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw config_error("bad boolean value for " + key + ": '" + value + "'");
}

}  // namespace detail

/// Apply one key/value pair to a RunConfig. Unknown keys are rejected.
inline void apply_config_entry(RunConfig& config, const std::string& key, const std::string& value) {
  using detail::parse_bool;
  using detail::parse_double;
  using detail::parse_uint;
  if (key == "lambda_max") config.lambda_max = parse_double(key, value);
  else if (key == "anneal_steps") config.anneal_steps = static_cast<std::uint32_t>(parse_uint(key, value));
  else if (key == "steps") config.steps = static_cast<std::uint32_t>(parse_uint(key, value));
  else if (key == "lr") config.lr = parse_double(key, value);
  else if (key == "momentum") config.momentum = parse_double(key, value);
  else if (key == "margin") config.margin = parse_double(key, value);
  else if (key == "batch_size") config.batch_size = static_cast<std::uint32_t>(parse_uint(key, value));
  else if (key == "seed") config.seed = parse_uint(key, value);
  else if (key == "regularizer") config.regularizer = regularizer_from_string(value);
  else if (key == "embedding_dim") config.embedding_dim = static_cast<std::uint32_t>(parse_uint(key, value));
  else if (key == "hidden_dim") config.hidden_dim = static_cast<std::uint32_t>(parse_uint(key, value));
  else if (key == "output_activation") config.output_activation = activation_from_string(value);
  else if (key == "normalize_output") config.normalize_output = parse_bool(key, value);
  else if (key == "num_classes") config.num_classes = static_cast<std::uint32_t>(parse_uint(key, value));
  else if (key == "per_class") config.per_class = static_cast<std::uint32_t>(parse_uint(key, value));
  else if (key == "input_dim") config.input_dim = static_cast<std::uint32_t>(parse_uint(key, value));
  else if (key == "noise") config.noise = parse_double(key, value);
  else if (key == "eval_fraction") config.eval_fraction = parse_double(key, value);
  else if (key == "eval_interval") config.eval_interval = static_cast<std::uint32_t>(parse_uint(key, value));
  else if (key == "threshold") config.threshold = parse_double(key, value);
  else if (key == "topk") config.topk = static_cast<std::uint32_t>(parse_uint(key, value));
  else if (key == "rerank_k") config.rerank_k = static_cast<std::uint32_t>(parse_uint(key, value));
  else throw config_error("unknown config key '" + key + "'");
}

/// Parse "key = value" lines; blank lines and #-comments are skipped.
inline RunConfig parse_config_text(const std::string& text) {
  RunConfig config;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw config_error("config line " + std::to_string(lineno) + " is not key = value: '" + t + "'");
    apply_config_entry(config, detail::trim(t.substr(0, eq)), detail::trim(t.substr(eq + 1)));
  }
  return config;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw config_error("cannot open config file " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str());
}

inline std::string config_to_text(const RunConfig& c) {
  std::ostringstream os;
  os << "lambda_max = " << csv_num(c.lambda_max) << "\n";
  os << "anneal_steps = " << c.anneal_steps << "\n";
  os << "steps = " << c.steps << "\n";
  os << "lr = " << csv_num(c.lr) << "\n";
  os << "momentum = " << csv_num(c.momentum) << "\n";
  os << "margin = " << csv_num(c.margin) << "\n";
  os << "batch_size = " << c.batch_size << "\n";
  os << "seed = " << c.seed << "\n";
  os << "regularizer = " << to_string(c.regularizer) << "\n";
  os << "embedding_dim = " << c.embedding_dim << "\n";
  os << "hidden_dim = " << c.hidden_dim << "\n";
  os << "output_activation = " << to_string(c.output_activation) << "\n";
  os << "normalize_output = " << (c.normalize_output ? "true" : "false") << "\n";
  os << "num_classes = " << c.num_classes << "\n";
  os << "per_class = " << c.per_class << "\n";
  os << "input_dim = " << c.input_dim << "\n";
  os << "noise = " << csv_num(c.noise) << "\n";
  os << "eval_fraction = " << csv_num(c.eval_fraction) << "\n";
  os << "eval_interval = " << c.eval_interval << "\n";
  os << "threshold = " << csv_num(c.threshold) << "\n";
  os << "topk = " << c.topk << "\n";
  os << "rerank_k = " << c.rerank_k << "\n";
  return os.str();
}

}  // namespace spfx
