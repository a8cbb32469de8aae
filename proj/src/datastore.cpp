#include "sensibound/datastore.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "sensibound/errors.hpp"

namespace sensibound {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string join(const std::vector<std::string>& cols) {
  std::string s;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) s += ',';
    s += cols[i];
  }
  return s;
}

std::vector<std::string> x_columns(int d_x) {
  std::vector<std::string> c;
  for (int j = 0; j < d_x; ++j) c.push_back("x_" + std::to_string(j));
  return c;
}

class Reader {
 public:
  explicit Reader(const fs::path& path) : path_(path), in_(path) {
    if (!in_) throw InputError("cannot open " + path.string());
  }

  std::vector<std::string> header() {
    std::string line;
    if (!next(line)) throw SchemaError(path_.string() + ": missing header row");
    return split(line);
  }

  bool row(std::vector<std::string>& cols, std::size_t expected) {
    std::string line;
    if (!next(line)) return false;
    cols = split(line);
    if (cols.size() != expected) {
      fail("expected " + std::to_string(expected) + " fields, found " + std::to_string(cols.size()));
    }
    return true;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(path_.string(), line_no_, what); }

  double real(const std::string& s) const {
    if (s.empty()) fail("empty numeric field");
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) fail("malformed number '" + s + "'");
    // ERANGE is also raised for subnormal results, which are valid values.
    if (!std::isfinite(v)) fail("non-finite value '" + s + "'");
    return v;
  }

  std::int64_t integer(const std::string& s) const {
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) fail("malformed integer '" + s + "'");
    return v;
  }

  int arm(const std::string& s) const {
    if (s == "0") return 0;
    if (s == "1") return 1;
    fail("treatment must be 0 or 1, found '" + s + "'");
  }

 private:
  bool next(std::string& line) {
    for (;;) {
      if (!std::getline(in_, line)) return false;
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return true;
    }
  }

  fs::path path_;
  std::ifstream in_;
  std::size_t line_no_ = 0;
};

// d_x from a header of the form prefix..., x_0, ..., x_{d-1}, suffix...
int covariate_width(const std::vector<std::string>& header, const fs::path& path, std::size_t prefix,
                    const std::vector<std::string>& suffix) {
  if (header.size() < prefix + suffix.size()) throw SchemaError(path.string() + ": header has too few columns");
  const int d = static_cast<int>(header.size() - prefix - suffix.size());
  const auto xs = x_columns(d);
  for (int j = 0; j < d; ++j) {
    if (header[prefix + j] != xs[j]) {
      throw SchemaError(path.string() + ": expected column '" + xs[j] + "', found '" + header[prefix + j] + "'");
    }
  }
  for (std::size_t j = 0; j < suffix.size(); ++j) {
    if (header[prefix + d + j] != suffix[j]) {
      throw SchemaError(path.string() + ": expected column '" + suffix[j] + "', found '" + header[prefix + d + j] +
                        "'");
    }
  }
  return d;
}

template <class Body>
fs::path write_file(const fs::path& path, bool overwrite, Body&& body) {
  if (fs::exists(path) && !overwrite) {
    throw FileExistsError(path.string() + " exists; pass the overwrite flag to replace it");
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    body(out);
    out.flush();
    if (!out) throw InputError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
  return path;
}

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw InputError(std::string("refusing to emit non-finite ") + what);
}

}  // namespace

fs::path queries_path(const fs::path& dir, std::int64_t id) { return dir / ("queries_" + std::to_string(id) + ".csv"); }
fs::path frontier_points_path(const fs::path& dir, std::int64_t id) {
  return dir / ("frontier_points_" + std::to_string(id) + ".csv");
}
fs::path dataset_path(const fs::path& dir, std::int64_t id) { return dir / ("dataset_" + std::to_string(id) + ".csv"); }

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

fs::path emit_queries(const fs::path& dir, std::int64_t dgp_id, const std::vector<QueryPoint>& queries,
                      bool overwrite, int d_x) {
  if (d_x < 0) d_x = queries.empty() ? 0 : static_cast<int>(queries.front().x.size());
  for (const auto& q : queries) {
    if (static_cast<int>(q.x.size()) != d_x) throw InputError("query covariate width mismatch");
    for (double v : q.x) check_finite(v, "covariate");
    if (q.a != 0 && q.a != 1) throw InputError("treatment must be 0 or 1");
  }
  return write_file(queries_path(dir, dgp_id), overwrite, [&](std::ofstream& out) {
    std::vector<std::string> h{"query_id"};
    for (auto& c : x_columns(d_x)) h.push_back(c);
    h.push_back("a");
    out << join(h) << '\n';
    for (const auto& q : queries) {
      out << q.query_id;
      for (double v : q.x) out << ',' << format_real(v);
      out << ',' << q.a << '\n';
    }
  });
}

fs::path emit_frontier_points(const fs::path& dir, std::int64_t dgp_id, const std::vector<LabelRecord>& records,
                              bool overwrite) {
  for (const auto& r : records) {
    check_finite(r.gamma_star, "gamma_star");
    check_finite(r.theta_star, "theta_star");
    if (r.gamma_star < 0.0) throw InputError("gamma_star must be non-negative");
  }
  return write_file(frontier_points_path(dir, dgp_id), overwrite, [&](std::ofstream& out) {
    out << "query_id,bound_type,gamma_star,theta_star\n";
    std::string line;
    for (const auto& r : records) {
      line.clear();
      line += std::to_string(r.query_id);
      line += ',';
      line += to_string(r.bound_type);
      line += ',';
      line += format_real(r.gamma_star);
      line += ',';
      line += format_real(r.theta_star);
      line += '\n';
      out << line;
    }
  });
}

fs::path emit_dataset(const fs::path& dir, std::int64_t dgp_id, const Dataset& data, bool overwrite, int d_x) {
  if (d_x < 0) d_x = data.rows.empty() ? 0 : static_cast<int>(data.rows.front().x.size());
  for (const auto& r : data.rows) {
    if (static_cast<int>(r.x.size()) != d_x) throw InputError("dataset covariate width mismatch");
    for (double v : r.x) check_finite(v, "covariate");
    check_finite(r.y, "outcome");
  }
  return write_file(dataset_path(dir, dgp_id), overwrite, [&](std::ofstream& out) {
    auto h = x_columns(d_x);
    h.push_back("a");
    h.push_back("y");
    out << join(h) << '\n';
    for (const auto& r : data.rows) {
      for (double v : r.x) out << format_real(v) << ',';
      out << r.a << ',' << format_real(r.y) << '\n';
    }
  });
}

std::vector<QueryPoint> load_queries(const fs::path& path) {
  Reader rd(path);
  const auto header = rd.header();
  if (header.empty() || header[0] != "query_id") throw SchemaError(path.string() + ": first column must be query_id");
  const int d = covariate_width(header, path, 1, {"a"});
  std::vector<QueryPoint> out;
  std::vector<std::string> cols;
  while (rd.row(cols, header.size())) {
    QueryPoint q;
    q.query_id = rd.integer(cols[0]);
    q.x.resize(d);
    for (int j = 0; j < d; ++j) q.x[j] = rd.real(cols[1 + j]);
    q.a = rd.arm(cols[1 + d]);
    out.push_back(std::move(q));
  }
  return out;
}

std::vector<LabelRecord> load_frontier_points(const fs::path& path) {
  Reader rd(path);
  const auto header = rd.header();
  const std::vector<std::string> expected{"query_id", "bound_type", "gamma_star", "theta_star"};
  if (header != expected) {
    throw SchemaError(path.string() + ": header must be " + join(expected) + ", found " + join(header));
  }
  std::vector<LabelRecord> out;
  std::vector<std::string> cols;
  while (rd.row(cols, expected.size())) {
    LabelRecord r;
    r.query_id = rd.integer(cols[0]);
    if (cols[1] == "lower") {
      r.bound_type = BoundType::Lower;
    } else if (cols[1] == "upper") {
      r.bound_type = BoundType::Upper;
    } else {
      rd.fail("bound_type must be lower or upper, found '" + cols[1] + "'");
    }
    r.gamma_star = rd.real(cols[2]);
    r.theta_star = rd.real(cols[3]);
    out.push_back(r);
  }
  return out;
}

Dataset load_dataset(const fs::path& path) {
  Reader rd(path);
  const auto header = rd.header();
  const int d = covariate_width(header, path, 0, {"a", "y"});
  Dataset data;
  std::vector<std::string> cols;
  while (rd.row(cols, header.size())) {
    Row r;
    r.x.resize(d);
    for (int j = 0; j < d; ++j) r.x[j] = rd.real(cols[j]);
    r.a = rd.arm(cols[d]);
    r.y = rd.real(cols[d + 1]);
    data.rows.push_back(std::move(r));
  }
  return data;
}

std::vector<LabelRecord> to_records(const FrontierCurve& curve) {
  std::vector<LabelRecord> out;
  out.reserve(curve.points.size());
  for (const auto& p : curve.points) out.push_back({curve.query_id, curve.bound_type, p.gamma_star, p.theta_star});
  return out;
}

}  // namespace sensibound
