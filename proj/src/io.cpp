#include "cpm/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace cpm {

std::string g17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

int log_level() {
  static const int level = [] {
    const char* env = std::getenv("CPM_LOG");
    if (env == nullptr || *env == '\0') return 0;
    return std::atoi(env);
  }();
  return level;
}

void log_line(int level, const std::string& msg) {
  if (log_level() >= level) std::cerr << "[cpm] " << msg << '\n';
}

void write_observations_csv(const std::string& path, const Eigen::MatrixXd& y) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << 't';
  for (Eigen::Index j = 0; j < y.cols(); ++j) os << ",y" << (j + 1);
  os << '\n';
  for (Eigen::Index t = 0; t < y.rows(); ++t) {
    os << (t + 1);
    for (Eigen::Index j = 0; j < y.cols(); ++j) os << ',' << g17(y(t, j));
    os << '\n';
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

Eigen::MatrixXd read_observations_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("empty observation file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  Eigen::Index k = 0;
  {
    std::stringstream header(line);
    std::string cell;
    std::getline(header, cell, ',');
    if (cell != "t") throw std::runtime_error("observation header must start with 't': " + path);
    while (std::getline(header, cell, ',')) ++k;
    if (k == 0) throw std::runtime_error("observation header has no y columns: " + path);
  }
  std::vector<double> values;
  Eigen::Index rows = 0;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');
    for (Eigen::Index j = 0; j < k; ++j) {
      if (!std::getline(row, cell, ','))
        throw std::runtime_error("short observation row in " + path);
      values.push_back(std::strtod(cell.c_str(), nullptr));
    }
    ++rows;
  }
  Eigen::MatrixXd y(rows, k);
  for (Eigen::Index t = 0; t < rows; ++t)
    for (Eigen::Index j = 0; j < k; ++j) y(t, j) = values[static_cast<std::size_t>(t * k + j)];
  return y;
}

TraceSink ndjson_sink(std::ostream& os) {
  return [&os](const TraceRecord& rec) {
    os << "{\"iter\":" << rec.iter << ",\"theta\":[";
    for (Eigen::Index i = 0; i < rec.theta.size(); ++i) {
      if (i > 0) os << ',';
      os << g17(rec.theta[i]);
    }
    os << "],\"acc\":" << (rec.accepted ? 1 : 0) << ",\"logp_cur\":" << g17(rec.logp_cur)
       << ",\"logp_prop\":" << g17(rec.logp_prop) << "}\n";
  };
}

namespace {

void open_with_hash(std::ofstream& os, const std::string& path, std::uint64_t config_hash) {
  os.open(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  char hex[24];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(config_hash));
  os << "# config " << hex << '\n';
}

}  // namespace

void write_stats_csv(const std::string& path, std::uint64_t config_hash,
                     const std::vector<StatRow>& rows) {
  std::ofstream os;
  open_with_hash(os, path, config_hash);
  os << "stat,value,stderr,flag\n";
  for (const StatRow& r : rows)
    os << r.stat << ',' << g17(r.value) << ',' << g17(r.stderr_) << ',' << (r.flag ? 1 : 0)
       << '\n';
  if (!os) throw std::runtime_error("write failed: " + path);
}

void write_table_csv(const std::string& path, std::uint64_t config_hash,
                     const std::vector<std::string>& extra_comments,
                     const std::string& header,
                     const std::vector<std::vector<std::string>>& rows) {
  std::ofstream os;
  open_with_hash(os, path, config_hash);
  for (const std::string& c : extra_comments) os << "# " << c << '\n';
  os << header << '\n';
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j > 0) os << ',';
      os << row[j];
    }
    os << '\n';
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

}  // namespace cpm
