#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "sensibound/frontier.hpp"
#include "sensibound/prior.hpp"

namespace sensibound {

/// Settings read from a key = value file. Blank lines and '#' comments are
/// ignored; unknown keys are errors.
struct Settings {
  PriorConfig prior;
  SweepConfig sweep;
  LambdaGrid grid;
  std::optional<std::uint64_t> seed;
};

std::map<std::string, std::string> parse_key_values(const std::string& text, const std::string& origin = "<config>");
/// Applies the file on top of `base`.
Settings load_settings(const std::filesystem::path& path, Settings base = {});
void apply_settings(Settings& s, const std::map<std::string, std::string>& kv);

/// Seed precedence: command-line flag, then SENSIBOUND_SEED, then config file, then fallback.
std::uint64_t resolve_seed(std::optional<std::uint64_t> flag, const Settings& settings, std::uint64_t fallback);

}  // namespace sensibound
