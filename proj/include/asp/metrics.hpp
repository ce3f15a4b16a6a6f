#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <string>
#include <vector>

namespace asp {

struct MetricsRecord {
  std::uint64_t step = 0;
  std::string agent;
  std::string name;
  double value = 0.0;
  double time = 0.0;  // seconds since the Unix epoch

  bool operator==(const MetricsRecord&) const = default;
};

// One JSON object per line: {"step", "agent", "name", "value", "time"}.
std::string FormatMetricsRecord(const MetricsRecord& record);
// Throws FormatError naming the line.
MetricsRecord ParseMetricsRecord(std::string_view line, int line_number = 1);

// Reads every record; a missing file reads as empty. Throws FormatError on a
// malformed line.
std::vector<MetricsRecord> ReadMetrics(const std::filesystem::path& path);

// Drops records whose step exceeds `max_step`, rewriting the file in place.
void TruncateMetrics(const std::filesystem::path& path, std::uint64_t max_step);

// Append-only writer. Steps never decrease per agent, including across
// reopenings of the same file. Safe to call from several threads.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::filesystem::path& path);

  // Stamps the current wall time. Throws ValidationError when `step` is
  // below the last step written for `agent`.
  void Write(std::uint64_t step, const std::string& agent,
             const std::string& name, double value);
  void Append(const MetricsRecord& record);

  std::size_t records_written() const;

 private:
  mutable std::mutex mu_;
  std::ofstream out_;
  std::map<std::string, std::uint64_t> last_step_;
  std::size_t written_ = 0;
};

}  // namespace asp
