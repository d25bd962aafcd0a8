#include "dknn/dataset.hpp"

#include <cmath>
#include <map>
#include <numeric>
#include <optional>

#include <json.hpp>

#include "dknn/binary_io.hpp"
#include "dknn/error.hpp"
#include "dknn/features.hpp"
#include "dknn/rng.hpp"

namespace dknn {

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.labels = labels;
  out.groups = groups;
  out.coarse_group = coarse_group;
  out.examples.reserve(indices.size());
  for (std::size_t i : indices) out.examples.push_back(examples.at(i));
  return out;
}

std::vector<std::string> Dataset::texts() const {
  std::vector<std::string> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back(ex.text);
  return out;
}

void Dataset::validate() const {
  for (const auto& ex : examples)
    require(ex.label < labels.size(), ErrorKind::InvalidArgument, "example label index outside vocabulary");
  if (has_groups()) {
    require(coarse_group.size() == labels.size(), ErrorKind::InvalidArgument,
            "coarse grouping must cover every label");
    for (auto g : coarse_group)
      require(g < groups.size(), ErrorKind::InvalidArgument, "coarse group index outside group list");
  }
}

DatasetFormat format_from_path(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? DatasetFormat::Csv : DatasetFormat::Jsonl;
}

namespace {

struct RawRecord {
  std::string text;
  std::string label;
  std::optional<std::string> coarse;
  std::size_t line = 0;
};

[[noreturn]] void malformed(std::size_t line, const std::string& why) {
  fail(ErrorKind::InvalidArgument, "malformed record at line " + std::to_string(line) + ": " + why);
}

std::vector<RawRecord> parse_jsonl(std::string_view contents) {
  std::vector<RawRecord> records;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= contents.size()) {
    const std::size_t end = std::min(contents.find('\n', pos), contents.size());
    std::string_view line = contents.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      malformed(line_no, e.what());
    }
    if (!j.is_object()) malformed(line_no, "expected a JSON object");
    if (!j.contains("text") || !j["text"].is_string()) malformed(line_no, "missing string field 'text'");
    if (!j.contains("label") || !j["label"].is_string()) malformed(line_no, "missing string field 'label'");
    RawRecord r;
    r.text = j["text"].get<std::string>();
    r.label = j["label"].get<std::string>();
    r.line = line_no;
    if (j.contains("coarse")) {
      if (!j["coarse"].is_string()) malformed(line_no, "field 'coarse' must be a string");
      r.coarse = j["coarse"].get<std::string>();
    }
    records.push_back(std::move(r));
  }
  return records;
}

// RFC 4180 fields: quoted fields may contain commas, newlines and "" escapes.
std::vector<std::vector<std::string>> parse_csv_rows(std::string_view contents, std::vector<std::size_t>& lines) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool row_has_content = false;
  std::size_t line = 1;
  std::size_t row_line = 1;
  for (std::size_t i = 0; i < contents.size(); ++i) {
    const char ch = contents[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < contents.size() && contents[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.push_back(ch);
      }
      continue;
    }
    if (ch == '"') {
      quoted = true;
      row_has_content = true;
    } else if (ch == ',') {
      row.push_back(std::move(field));
      field.clear();
      row_has_content = true;
    } else if (ch == '\n' || ch == '\r') {
      if (ch == '\r' && i + 1 < contents.size() && contents[i + 1] == '\n') ++i;
      if (row_has_content || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
        lines.push_back(row_line);
      }
      field.clear();
      row.clear();
      row_has_content = false;
      ++line;
      row_line = line;
    } else {
      field.push_back(ch);
      row_has_content = true;
    }
  }
  if (quoted) malformed(row_line, "unterminated quoted field");
  if (row_has_content || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
    lines.push_back(row_line);
  }
  return rows;
}

std::vector<RawRecord> parse_csv(std::string_view contents) {
  std::vector<std::size_t> lines;
  auto rows = parse_csv_rows(contents, lines);
  if (rows.empty()) return {};
  const auto& header = rows.front();
  std::optional<std::size_t> text_col, label_col, coarse_col;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "text") text_col = i;
    else if (header[i] == "label") label_col = i;
    else if (header[i] == "coarse") coarse_col = i;
  }
  if (!text_col || !label_col) malformed(lines.front(), "CSV header must name 'text' and 'label' columns");
  std::vector<RawRecord> records;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size())
      malformed(lines[r], "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(row.size()));
    RawRecord rec;
    rec.text = row[*text_col];
    rec.label = row[*label_col];
    rec.line = lines[r];
    if (coarse_col && !row[*coarse_col].empty()) rec.coarse = row[*coarse_col];
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace

Dataset parse_dataset(std::string_view contents, DatasetFormat format, const std::vector<std::string>* fixed_labels) {
  const auto records = format == DatasetFormat::Jsonl ? parse_jsonl(contents) : parse_csv(contents);
  require(!records.empty(), ErrorKind::InvalidArgument, "dataset is empty");

  Dataset data;
  std::map<std::string, std::uint32_t> label_index;
  if (fixed_labels) {
    data.labels = *fixed_labels;
    for (std::size_t i = 0; i < data.labels.size(); ++i) label_index.emplace(data.labels[i], i);
  }
  std::size_t with_coarse = 0;
  for (const auto& r : records) {
    if (r.label.empty()) malformed(r.line, "empty label");
    auto it = label_index.find(r.label);
    if (it == label_index.end()) {
      if (fixed_labels) malformed(r.line, "label '" + r.label + "' is not in the model's label vocabulary");
      it = label_index.emplace(r.label, static_cast<std::uint32_t>(data.labels.size())).first;
      data.labels.push_back(r.label);
    }
    data.examples.push_back({r.text, it->second});
    if (r.coarse) ++with_coarse;
  }

  if (with_coarse != 0 && with_coarse != records.size())
    fail(ErrorKind::InvalidArgument, "field 'coarse' present in " + std::to_string(with_coarse) + " of " +
                                         std::to_string(records.size()) + " records; it must be on all or none");
  if (with_coarse == records.size()) {
    std::map<std::string, std::uint32_t> group_index;
    std::vector<std::optional<std::uint32_t>> assigned(data.labels.size());
    for (std::size_t n = 0; n < records.size(); ++n) {
      const auto& r = records[n];
      auto g = group_index.find(*r.coarse);
      if (g == group_index.end()) {
        g = group_index.emplace(*r.coarse, static_cast<std::uint32_t>(data.groups.size())).first;
        data.groups.push_back(*r.coarse);
      }
      auto& slot = assigned[data.examples[n].label];
      if (slot && *slot != g->second)
        malformed(r.line, "label '" + r.label + "' appears under two coarse groups");
      slot = g->second;
    }
    for (std::size_t i = 0; i < assigned.size(); ++i) {
      require(assigned[i].has_value(), ErrorKind::InvalidArgument,
              "label '" + data.labels[i] + "' has no coarse group (no examples)");
      data.coarse_group.push_back(*assigned[i]);
    }
  }
  return data;
}

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format,
                     const std::vector<std::string>* fixed_labels) {
  require(std::filesystem::exists(path), ErrorKind::Io, "dataset not found: " + path.string());
  return parse_dataset(read_file(path), format, fixed_labels);
}

std::string to_jsonl(const Dataset& data) {
  std::string out;
  for (const auto& ex : data.examples) {
    nlohmann::ordered_json j;
    j["text"] = ex.text;
    j["label"] = data.labels[ex.label];
    if (data.has_groups()) j["coarse"] = data.groups[data.coarse_group[ex.label]];
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::uint64_t SplitIndices::hash() const {
  ByteWriter w;
  w.u64(train.size());
  for (auto i : train) w.u64(i);
  w.u64(test.size());
  for (auto i : test) w.u64(i);
  return fnv1a64(w.data());
}

SplitIndices split_indices(std::size_t n, double train_ratio, std::uint64_t seed) {
  require(train_ratio > 0.0 && train_ratio < 1.0, ErrorKind::InvalidArgument, "train_ratio must lie in (0, 1)");
  const auto cut = static_cast<std::size_t>(std::floor(train_ratio * static_cast<double>(n)));
  require(cut > 0 && cut < n, ErrorKind::InvalidArgument,
          "split of " + std::to_string(n) + " examples at ratio leaves one side empty");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  SplitIndices s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cut));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(cut), order.end());
  return s;
}

std::pair<Dataset, Dataset> split(const Dataset& data, double train_ratio, std::uint64_t seed) {
  const SplitIndices s = split_indices(data.size(), train_ratio, seed);
  return {data.subset(s.train), data.subset(s.test)};
}

Dataset inject_noise(const Dataset& data, double noise_ratio, std::uint64_t seed) {
  require(noise_ratio >= 0.0 && noise_ratio <= 1.0, ErrorKind::InvalidArgument, "noise_ratio must lie in [0, 1]");
  data.validate();
  Dataset out = data;
  const std::size_t n = data.size();
  const auto count = static_cast<std::size_t>(std::floor(noise_ratio * static_cast<double>(n)));
  if (count == 0) return out;

  // Candidate replacement labels per label, ascending.
  std::vector<std::vector<std::uint32_t>> candidates(data.num_labels());
  for (std::uint32_t a = 0; a < data.num_labels(); ++a)
    for (std::uint32_t b = 0; b < data.num_labels(); ++b)
      if (a != b && (!data.has_groups() || data.coarse_group[a] == data.coarse_group[b])) candidates[a].push_back(b);

  Rng rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Partial Fisher-Yates: the first `count` slots become a uniform sample.
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(order[i], order[j]);
  }
  for (std::size_t i = 0; i < count; ++i) {
    auto& ex = out.examples[order[i]];
    const auto& pool = candidates[ex.label];
    if (pool.empty()) {
      const std::string where = data.has_groups() ? "coarse group '" + data.groups[data.coarse_group[ex.label]] + "'"
                                                  : "the label vocabulary";
      fail(ErrorKind::InvalidArgument, "cannot relabel: " + where + " has a single label");
    }
    ex.label = pool[rng.below(pool.size())];
  }
  return out;
}

}  // namespace dknn
