#include "asp/metrics.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "asp/errors.hpp"
#include "json.hpp"

namespace asp {

using Json = nlohmann::ordered_json;

std::string FormatMetricsRecord(const MetricsRecord& r) {
  Json j;
  j["step"] = r.step;
  j["agent"] = r.agent;
  j["name"] = r.name;
  // JSON has no NaN or infinity; they are written as null.
  if (std::isfinite(r.value)) {
    j["value"] = r.value;
  } else {
    j["value"] = nullptr;
  }
  j["time"] = r.time;
  return j.dump();
}

MetricsRecord ParseMetricsRecord(std::string_view line, int line_number) {
  const auto fail = [&](const std::string& msg) {
    return FormatError("metrics line " + std::to_string(line_number) + ": " + msg);
  };
  Json j;
  try {
    j = Json::parse(line);
  } catch (const Json::parse_error& e) {
    throw fail(e.what());
  }
  if (!j.is_object()) throw fail("expected an object");
  MetricsRecord r;
  try {
    if (!j.at("step").is_number_unsigned()) throw fail("step must be a non-negative integer");
    r.step = j.at("step").get<std::uint64_t>();
    r.agent = j.at("agent").get<std::string>();
    r.name = j.at("name").get<std::string>();
    const Json& v = j.at("value");
    r.value = v.is_null() ? std::nan("") : v.get<double>();
    r.time = j.at("time").get<double>();
  } catch (const Json::exception& e) {
    throw fail(e.what());
  }
  return r;
}

std::vector<MetricsRecord> ReadMetrics(const std::filesystem::path& path) {
  std::vector<MetricsRecord> records;
  std::ifstream in(path);
  if (!in) return records;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    records.push_back(ParseMetricsRecord(line, n));
  }
  return records;
}

void TruncateMetrics(const std::filesystem::path& path, std::uint64_t max_step) {
  if (!std::filesystem::exists(path)) return;
  std::ostringstream kept;
  for (const MetricsRecord& r : ReadMetrics(path)) {
    if (r.step <= max_step) kept << FormatMetricsRecord(r) << '\n';
  }
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << kept.str();
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

MetricsWriter::MetricsWriter(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  for (const MetricsRecord& r : ReadMetrics(path)) {
    auto [it, inserted] = last_step_.emplace(r.agent, r.step);
    if (!inserted && r.step > it->second) it->second = r.step;
  }
  out_.open(path, std::ios::app);
  if (!out_) throw std::runtime_error("cannot open " + path.string());
}

void MetricsWriter::Write(std::uint64_t step, const std::string& agent,
                          const std::string& name, double value) {
  const double now = std::chrono::duration<double>(
                         std::chrono::system_clock::now().time_since_epoch())
                         .count();
  Append({step, agent, name, value, now});
}

void MetricsWriter::Append(const MetricsRecord& record) {
  const std::string line = FormatMetricsRecord(record) + "\n";
  std::lock_guard<std::mutex> lock(mu_);
  auto it = last_step_.find(record.agent);
  if (it != last_step_.end() && record.step < it->second) {
    throw ValidationError("metrics step " + std::to_string(record.step) +
                          " for agent '" + record.agent + "' is below " +
                          std::to_string(it->second));
  }
  last_step_[record.agent] = record.step;
  out_ << line;
  out_.flush();
  ++written_;
}

std::size_t MetricsWriter::records_written() const {
  std::lock_guard<std::mutex> lock(mu_);
  return written_;
}

}  // namespace asp
