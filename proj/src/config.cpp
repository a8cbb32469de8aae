#include "sensibound/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "sensibound/errors.hpp"

namespace sensibound {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_real(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size()) throw InputError("config key '" + key + "' expects a number");
  return x;
}

std::int64_t to_int(const std::string& key, const std::string& v) {
  std::int64_t x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) throw InputError("config key '" + key + "' expects an integer");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw InputError("config key '" + key + "' expects true or false");
}

std::uint64_t to_seed(const std::string& what, const std::string& v) {
  std::uint64_t x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || ec != std::errc() || p != v.data() + v.size()) {
    throw InputError(what + " must be a non-negative integer");
  }
  return x;
}

}  // namespace

std::map<std::string, std::string> parse_key_values(const std::string& text, const std::string& origin) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(origin, n, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError(origin, n, "empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

void apply_settings(Settings& s, const std::map<std::string, std::string>& kv) {
  for (const auto& [k, v] : kv) {
    auto& p = s.prior;
    auto& w = s.sweep;
    if (k == "seed") s.seed = to_seed("config key 'seed'", v);
    else if (k == "d_x") p.d_x = static_cast<int>(to_int(k, v));
    else if (k == "n_obs") p.n_obs = static_cast<int>(to_int(k, v));
    else if (k == "hidden_widths") {
      p.hidden_widths.clear();
      std::istringstream in(v);
      std::string item;
      while (std::getline(in, item, ',')) p.hidden_widths.push_back(static_cast<int>(to_int(k, trim(item))));
    }
    else if (k == "activation") p.activation = v;
    else if (k == "weight_scale") p.weight_scale = to_real(k, v);
    else if (k == "propensity_clip_lo") p.propensity_clip.first = to_real(k, v);
    else if (k == "propensity_clip_hi") p.propensity_clip.second = to_real(k, v);
    else if (k == "noise_scale_lo") p.noise_scale_range.first = to_real(k, v);
    else if (k == "noise_scale_hi") p.noise_scale_range.second = to_real(k, v);
    else if (k == "normalize_eps") p.normalize_eps = to_real(k, v);
    else if (k == "pilot_size") p.pilot_size = static_cast<int>(to_int(k, v));
    else if (k == "lambda_max") s.grid.lambda_max = to_real(k, v);
    else if (k == "lambda_min") s.grid.lambda_min = to_real(k, v);
    else if (k == "grid_size") s.grid.n_points = static_cast<int>(to_int(k, v));
    else if (k == "base_max_steps") w.base_max_steps = static_cast<int>(to_int(k, v));
    else if (k == "step_cap") w.step_cap = to_real(k, v);
    else if (k == "lr_base") w.lr_base = to_real(k, v);
    else if (k == "lr_ref") w.lr_ref = to_real(k, v);
    else if (k == "lr_min_mult") w.lr_min_mult = to_real(k, v);
    else if (k == "early_stop") w.early_stop.enabled = to_bool(k, v);
    else if (k == "min_steps") w.early_stop.min_steps = static_cast<int>(to_int(k, v));
    else if (k == "check_every") w.early_stop.check_every = static_cast<int>(to_int(k, v));
    else if (k == "patience") w.early_stop.patience = static_cast<int>(to_int(k, v));
    else if (k == "abs_tol") w.early_stop.abs_tol = to_real(k, v);
    else if (k == "rel_tol") w.early_stop.rel_tol = to_real(k, v);
    else if (k == "k_train") w.k_train = static_cast<int>(to_int(k, v));
    else if (k == "k_eval") w.k_eval = static_cast<int>(to_int(k, v));
    else if (k == "warm_start") w.warm_start = to_bool(k, v);
    else if (k == "n_bins") w.n_bins = static_cast<int>(to_int(k, v));
    else if (k == "tail_bound") w.tail_bound = to_real(k, v);
    else if (k == "sampler_seed") w.sampler_seed = to_seed("config key 'sampler_seed'", v);
    else if (k == "msm_temperature") w.msm_temperature = to_real(k, v);
    else throw InputError("unknown config key '" + k + "'");
  }
  s.prior.validate();
  s.sweep.validate();
  s.grid.validate();
}

Settings load_settings(const std::filesystem::path& path, Settings base) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  apply_settings(base, parse_key_values(buf.str(), path.string()));
  return base;
}

std::uint64_t resolve_seed(std::optional<std::uint64_t> flag, const Settings& settings, std::uint64_t fallback) {
  if (flag) return *flag;
  if (const char* env = std::getenv("SENSIBOUND_SEED"); env && *env) return to_seed("SENSIBOUND_SEED", env);
  if (settings.seed) return *settings.seed;
  return fallback;
}

}  // namespace sensibound
