// Copyright 2026 The linpfn Authors
// SPDX-License-Identifier: Apache-2.0

#include "linpfn/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace linpfn {

CsvTable parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> rec;
  std::string field;
  bool quoted = false, any = false;
  std::size_t line = 1;
  auto end_field = [&] {
    rec.push_back(std::move(field));
    field.clear();
  };
  auto end_record = [&] {
    end_field();
    if (!(rec.size() == 1 && rec[0].empty())) records.push_back(std::move(rec));
    rec.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    any = true;
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && field.empty()) {
      quoted = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      end_record();
      ++line;
    } else {
      field.push_back(c);
    }
  }
  if (quoted) throw FormatError("csv", "unterminated quoted field near line " + std::to_string(line));
  if (any && (!field.empty() || !rec.empty())) end_record();
  if (records.empty()) throw FormatError("csv.header", "no header row");
  CsvTable t;
  t.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != t.header.size())
      throw FormatError("csv.row[" + std::to_string(r) + "]", "expected " + std::to_string(t.header.size()) +
                                                                  " fields, found " + std::to_string(records[r].size()));
    t.rows.push_back(std::move(records[r]));
  }
  return t;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_csv(ss.str());
}

bool is_missing_token(std::string_view s) {
  return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "?" || s == "null";
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

// Sorted distinct tokens; numeric order when every token parses.
std::vector<std::string> sorted_vocab(const std::set<std::string>& tokens) {
  std::vector<std::string> v(tokens.begin(), tokens.end());
  const bool numeric = std::all_of(v.begin(), v.end(), [](const std::string& s) { return parse_number(s).has_value(); });
  if (numeric)
    std::stable_sort(v.begin(), v.end(),
                     [](const std::string& a, const std::string& b) { return *parse_number(a) < *parse_number(b); });
  return v;
}

std::string list_columns(const std::vector<std::string>& header) {
  std::string s;
  for (const auto& h : header) s += (s.empty() ? "" : ", ") + h;
  return s;
}

}  // namespace

TabularTask task_from_csv(const CsvTable& table, const CsvLoadOptions& opts) {
  const auto it = std::find(table.header.begin(), table.header.end(), opts.label_column);
  if (it == table.header.end())
    throw UsageError("label column '" + opts.label_column + "' not found; available columns: " +
                     list_columns(table.header));
  for (const auto& c : opts.categorical)
    if (std::find(table.header.begin(), table.header.end(), c) == table.header.end())
      throw UsageError("categorical column '" + c + "' not found; available columns: " + list_columns(table.header));
  const std::size_t label_col = static_cast<std::size_t>(it - table.header.begin());
  const std::size_t n = table.rows.size();
  if (n == 0) throw ContractError("csv has no data rows");

  TabularTask task;
  task.n_train = n;
  task.kind = opts.regression ? TaskKind::regression : TaskKind::classification;
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < table.header.size(); ++c)
    if (c != label_col) feature_cols.push_back(c);
  if (feature_cols.empty()) throw ContractError("csv has no feature columns");
  task.x = Matrix(n, feature_cols.size());

  bool any_categorical = false;
  std::vector<ColumnKind> kinds(feature_cols.size());
  for (std::size_t f = 0; f < feature_cols.size(); ++f) {
    const std::size_t c = feature_cols[f];
    task.feature_names.push_back(table.header[c]);
    bool categorical =
        std::find(opts.categorical.begin(), opts.categorical.end(), table.header[c]) != opts.categorical.end();
    std::set<std::string> tokens;
    for (const auto& row : table.rows) {
      const std::string_view s = trim(row[c]);
      if (is_missing_token(s)) continue;
      tokens.emplace(s);
      if (!parse_number(s)) categorical = true;
    }
    if (categorical) {
      const auto vocab = sorted_vocab(tokens);
      std::map<std::string, double, std::less<>> code;
      for (std::size_t k = 0; k < vocab.size(); ++k) code.emplace(vocab[k], static_cast<double>(k));
      for (std::size_t r = 0; r < n; ++r) {
        const std::string_view s = trim(table.rows[r][c]);
        task.x(r, f) = is_missing_token(s) ? std::numeric_limits<double>::quiet_NaN() : code.find(s)->second;
      }
      kinds[f] = ColumnKind{true, vocab.size()};
      any_categorical = true;
    } else {
      for (std::size_t r = 0; r < n; ++r) {
        const std::string_view s = trim(table.rows[r][c]);
        task.x(r, f) = is_missing_token(s) ? std::numeric_limits<double>::quiet_NaN() : *parse_number(s);
      }
    }
  }
  if (any_categorical) task.columns = std::move(kinds);

  if (opts.regression) {
    task.targets.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
      const auto v = parse_number(table.rows[r][label_col]);
      if (!v) throw FormatError("csv.row[" + std::to_string(r + 1) + "]." + opts.label_column, "target is not numeric");
      task.targets[r] = *v;
    }
  } else {
    std::set<std::string> tokens;
    for (std::size_t r = 0; r < n; ++r) {
      const std::string_view s = trim(table.rows[r][label_col]);
      if (is_missing_token(s))
        throw FormatError("csv.row[" + std::to_string(r + 1) + "]." + opts.label_column, "missing label");
      tokens.emplace(s);
    }
    const auto vocab = sorted_vocab(tokens);
    std::map<std::string, std::size_t, std::less<>> idx;
    for (std::size_t k = 0; k < vocab.size(); ++k) idx.emplace(vocab[k], k);
    task.labels.resize(n);
    for (std::size_t r = 0; r < n; ++r) task.labels[r] = idx.find(trim(table.rows[r][label_col]))->second;
    task.n_classes = vocab.size();
  }
  task.validate();
  return task;
}

TabularTask load_csv_task(const std::filesystem::path& path, const CsvLoadOptions& opts) {
  return task_from_csv(read_csv(path), opts);
}

std::string task_to_csv(const TabularTask& task) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t j = 0; j < task.features(); ++j)
    os << (j < task.feature_names.size() ? task.feature_names[j] : "x" + std::to_string(j)) << ',';
  const bool regression = task.kind == TaskKind::regression;
  os << (regression ? "target" : "label") << '\n';
  for (std::size_t i = 0; i < task.rows(); ++i) {
    for (std::size_t j = 0; j < task.features(); ++j) {
      const double v = task.x(i, j);
      if (std::isfinite(v)) os << v;
      else os << "NA";
      os << ',';
    }
    if (regression) os << task.targets[i];
    else os << task.labels[i];
    os << '\n';
  }
  return os.str();
}

}  // namespace linpfn
