#pragma once
// Deterministic artifact serialization: round-trip floating-point text, the
// observation CSV layout, NDJSON trace sinks, and stat-report CSVs carrying a
// config-hash comment header.
#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "cpm/samplers.hpp"

namespace cpm {

// %.17g; parses back to the identical double
std::string g17(double x);

// 64-bit FNV-1a over the bytes
std::uint64_t fnv1a64(std::string_view s);

// CPM_LOG environment variable, parsed once (0 quiet, 1 progress, 2 debug)
int log_level();
void log_line(int level, const std::string& msg);

// header "t,y1,...,yk", one row per observation
void write_observations_csv(const std::string& path, const Eigen::MatrixXd& y);
Eigen::MatrixXd read_observations_csv(const std::string& path);

// one {"iter","theta","acc","logp_cur","logp_prop"} object per line
TraceSink ndjson_sink(std::ostream& os);

struct StatRow {
  std::string stat;
  double value = 0.0;
  double stderr_ = 0.0;
  bool flag = false;
};

// "# config <hex>" comment, then "stat,value,stderr,flag" rows
void write_stats_csv(const std::string& path, std::uint64_t config_hash,
                     const std::vector<StatRow>& rows);

// "# config <hex>" plus extra comment lines, then header and string rows
void write_table_csv(const std::string& path, std::uint64_t config_hash,
                     const std::vector<std::string>& extra_comments,
                     const std::string& header,
                     const std::vector<std::vector<std::string>>& rows);

}  // namespace cpm
