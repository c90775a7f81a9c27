#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "guarnet/csv.hpp"

namespace guarnet {

// The five feature categories. BP basic profile, CR credit behavior, AL
// active loan, NS network structure, CM community behavior.
enum class FeatureCategory { BP, CR, AL, NS, CM };

inline constexpr int kCategoryCount = 5;
inline constexpr std::array<FeatureCategory, kCategoryCount> kAllCategories = {
    FeatureCategory::BP, FeatureCategory::CR, FeatureCategory::AL, FeatureCategory::NS,
    FeatureCategory::CM};

inline std::string to_string(FeatureCategory c) {
  switch (c) {
    case FeatureCategory::BP: return "BP";
    case FeatureCategory::CR: return "CR";
    case FeatureCategory::AL: return "AL";
    case FeatureCategory::NS: return "NS";
    case FeatureCategory::CM: return "CM";
  }
  return "?";
}

inline FeatureCategory parse_category(const std::string& s) {
  for (FeatureCategory c : kAllCategories)
    if (s == to_string(c)) return c;
  throw std::invalid_argument("unknown feature category '" + s + "'");
}

// One prediction cohort: a rectangular numeric matrix with named, categorized
// dimensions, one row per customer, ascending by customer id.
struct FeatureMatrix {
  std::string window_label;                 // cohort tag, e.g. "2013Q1"
  std::vector<std::string> dimension_names;
  std::vector<FeatureCategory> categories;  // parallel to dimension_names
  std::vector<std::string> instance_ids;
  std::vector<std::vector<double>> values;  // [instance][dimension]
  std::vector<int> labels;                  // 0/1, parallel to instance_ids

  std::size_t n_rows() const { return values.size(); }
  std::size_t n_dims() const { return dimension_names.size(); }

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;
};

// Column subset preserving order; the projection shares no state with the
// source, so ablations cannot drift from the full matrix.
inline FeatureMatrix select_categories(const FeatureMatrix& m,
                                       const std::set<FeatureCategory>& keep) {
  FeatureMatrix out;
  out.window_label = m.window_label;
  out.instance_ids = m.instance_ids;
  out.labels = m.labels;
  std::vector<std::size_t> cols;
  for (std::size_t j = 0; j < m.n_dims(); ++j)
    if (keep.count(m.categories[j])) {
      cols.push_back(j);
      out.dimension_names.push_back(m.dimension_names[j]);
      out.categories.push_back(m.categories[j]);
    }
  out.values.reserve(m.n_rows());
  for (const auto& row : m.values) {
    std::vector<double> r;
    r.reserve(cols.size());
    for (std::size_t j : cols) r.push_back(row[j]);
    out.values.push_back(std::move(r));
  }
  return out;
}

// Reorders columns to exactly `names`; a name the matrix lacks becomes an
// all-zero column. Used to align a later cohort to the dimensions a model was
// trained on (one-hot vocabularies can grow between quarters).
inline FeatureMatrix align_to(const FeatureMatrix& m, const std::vector<std::string>& names,
                              const std::vector<FeatureCategory>& categories) {
  if (names.size() != categories.size())
    throw std::invalid_argument("align_to: names/categories size mismatch");
  FeatureMatrix out;
  out.window_label = m.window_label;
  out.instance_ids = m.instance_ids;
  out.labels = m.labels;
  out.dimension_names = names;
  out.categories = categories;

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t j = 0; j < m.n_dims(); ++j) index.emplace(m.dimension_names[j], j);
  std::vector<std::ptrdiff_t> source(names.size(), -1);
  for (std::size_t j = 0; j < names.size(); ++j) {
    auto it = index.find(names[j]);
    if (it != index.end()) source[j] = static_cast<std::ptrdiff_t>(it->second);
  }

  out.values.reserve(m.n_rows());
  for (const auto& row : m.values) {
    std::vector<double> r(names.size(), 0.0);
    for (std::size_t j = 0; j < names.size(); ++j)
      if (source[j] >= 0) r[j] = row[source[j]];
    out.values.push_back(std::move(r));
  }
  return out;
}

// CSV form: customer_id, <dimension names...>, label. Doubles are written in
// shortest round-trip decimal so save/load/save is byte-stable.
inline void write_matrix_csv(const FeatureMatrix& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  std::vector<std::string> header{"customer_id"};
  header.insert(header.end(), m.dimension_names.begin(), m.dimension_names.end());
  header.push_back("label");
  csv::write_row(out, header);
  for (std::size_t i = 0; i < m.n_rows(); ++i) {
    std::vector<std::string> row{m.instance_ids[i]};
    for (double v : m.values[i]) row.push_back(csv::format_double(v));
    row.push_back(std::to_string(m.labels[i]));
    csv::write_row(out, row);
  }
}

// Sidecar JSON: window label plus the dimension -> category map.
inline void write_category_map(const FeatureMatrix& m, const std::string& path) {
  nlohmann::json j;
  j["window"] = m.window_label;
  nlohmann::json cats = nlohmann::json::object();
  for (std::size_t i = 0; i < m.n_dims(); ++i)
    cats[m.dimension_names[i]] = to_string(m.categories[i]);
  j["categories"] = cats;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << j.dump(2) << "\n";
}

inline FeatureMatrix read_matrix_csv(const std::string& csv_path, const std::string& map_path) {
  nlohmann::json j;
  {
    std::ifstream in(map_path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read file: " + map_path);
    in >> j;
  }
  FeatureMatrix m;
  m.window_label = j.at("window").get<std::string>();
  const auto& cats = j.at("categories");

  auto table = csv::read_file(csv_path);
  if (table.header.size() < 2 || table.header.front() != "customer_id" ||
      table.header.back() != "label")
    throw std::runtime_error(csv_path + ": expected header customer_id,...,label");
  for (std::size_t k = 1; k + 1 < table.header.size(); ++k) {
    const std::string& name = table.header[k];
    m.dimension_names.push_back(name);
    m.categories.push_back(parse_category(cats.at(name).get<std::string>()));
  }
  for (const auto& row : table.rows) {
    if (row.fields.size() != table.header.size())
      throw csv::ParseError(csv_path, row.line, 1, "field count mismatch");
    m.instance_ids.push_back(row.fields.front());
    std::vector<double> values;
    values.reserve(m.n_dims());
    for (std::size_t k = 1; k + 1 < row.fields.size(); ++k)
      values.push_back(std::stod(row.fields[k]));
    m.values.push_back(std::move(values));
    const std::string& lab = row.fields.back();
    if (lab != "0" && lab != "1") throw csv::ParseError(csv_path, row.line, row.fields.size(), "label must be 0 or 1");
    m.labels.push_back(lab == "1" ? 1 : 0);
  }
  return m;
}

}  // namespace guarnet
