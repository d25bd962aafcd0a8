#include <cstdio>
#include <json.hpp>
#include <sstream>

#include "dknn/harness.hpp"

namespace dknn {

std::string ExperimentReport::to_json(bool include_timing) const {
  nlohmann::ordered_json j;
  j["title"] = title;
  auto rows_json = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json row;
    row["config"] = r.config;
    row["mean"] = r.mean;
    row["std"] = r.std;
    row["repeats"] = r.repeats;
    row["splits"] = r.splits;
    for (const auto& s : r.extra) row[s.name] = s.values;
    rows_json.push_back(std::move(row));
  }
  j["rows"] = std::move(rows_json);
  if (include_timing) j["wall_seconds"] = wall_seconds;
  return j.dump(2) + "\n";
}

std::string ExperimentReport::to_table() const {
  std::size_t width = 6;
  for (const auto& r : rows) width = std::max(width, r.config.size());
  std::ostringstream out;
  char buf[128];
  out << title << "\n";
  std::snprintf(buf, sizeof buf, "%-*s  %8s  %8s", static_cast<int>(width), "config", "mean", "std");
  out << buf;
  if (!rows.empty())
    for (const auto& s : rows.front().extra) {
      std::snprintf(buf, sizeof buf, "  %8s", s.name.c_str());
      out << buf;
    }
  out << "\n";
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-*s  %8.4f  %8.4f", static_cast<int>(width), r.config.c_str(), r.mean, r.std);
    out << buf;
    for (const auto& s : r.extra) {
      std::snprintf(buf, sizeof buf, "  %8.4f", sample_mean(s.values));
      out << buf;
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace dknn
