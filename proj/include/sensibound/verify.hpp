#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sensibound/oracles.hpp"

namespace sensibound {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

using CateFn = std::function<Bounds(double lower0, double upper0, double lower1, double upper1)>;

struct VerifyOptions {
  std::uint64_t seed = 0;
  CateFn cate;  // aggregation under test; cate_bounds when empty
};

const std::vector<std::string>& verify_suites();
bool is_verify_suite(const std::string& name);
/// Runs one invariant suite. Throws InputError for an unknown suite name.
std::vector<CheckResult> run_verify_suite(const std::string& suite, const VerifyOptions& options = {});

/// Deliberately broken CATE aggregation, used to show the suite catches it.
Bounds cate_bounds_sign_fault(double lower0, double upper0, double lower1, double upper1);

}  // namespace sensibound
