#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sensibound/frontier.hpp"
#include "sensibound/prior.hpp"

namespace sensibound {

struct LabelRecord {
  std::int64_t query_id = 0;
  BoundType bound_type = BoundType::Upper;
  double gamma_star = 0.0;
  double theta_star = 0.0;

  bool operator==(const LabelRecord&) const = default;
};

namespace fs = std::filesystem;

fs::path queries_path(const fs::path& dir, std::int64_t dgp_id);
fs::path frontier_points_path(const fs::path& dir, std::int64_t dgp_id);
fs::path dataset_path(const fs::path& dir, std::int64_t dgp_id);

/// Real numbers are written with 17 significant digits, which round-trips
/// every finite double exactly.
std::string format_real(double v);

/// Each emitter writes into dir and returns the file path. An existing file is
/// refused unless overwrite is set. d_x < 0 infers the width from the rows.
fs::path emit_queries(const fs::path& dir, std::int64_t dgp_id, const std::vector<QueryPoint>& queries,
                      bool overwrite = false, int d_x = -1);
fs::path emit_frontier_points(const fs::path& dir, std::int64_t dgp_id, const std::vector<LabelRecord>& records,
                              bool overwrite = false);
fs::path emit_dataset(const fs::path& dir, std::int64_t dgp_id, const Dataset& data, bool overwrite = false,
                      int d_x = -1);

std::vector<QueryPoint> load_queries(const fs::path& path);
std::vector<LabelRecord> load_frontier_points(const fs::path& path);
Dataset load_dataset(const fs::path& path);

/// Label records for one frontier curve, in sweep order.
std::vector<LabelRecord> to_records(const FrontierCurve& curve);

}  // namespace sensibound
