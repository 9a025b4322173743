// Copyright 2026 The linpfn Authors
// SPDX-License-Identifier: Apache-2.0

// CSV ingestion and export of tabular tasks.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "linpfn/task.hpp"

namespace linpfn {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// RFC 4180 style: comma separated, double-quoted fields may hold commas,
/// newlines and "" escapes. The first record is the header.
CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);

struct CsvLoadOptions {
  std::string label_column;
  /// Columns treated as categorical even when every token is numeric.
  std::vector<std::string> categorical;
  bool regression = false;
};

/// Empty, "NA", "NaN", "?" and "null" count as missing (NaN for numeric columns).
bool is_missing_token(std::string_view s);

/// Builds a task whose rows are all in the train split (n_train = rows).
/// Non-numeric columns become categorical codes in sorted-vocabulary order.
/// Class labels are indexed in sorted order (numeric order when all numeric).
/// An unknown label column raises UsageError listing the available columns.
TabularTask task_from_csv(const CsvTable& table, const CsvLoadOptions& opts);
TabularTask load_csv_task(const std::filesystem::path& path, const CsvLoadOptions& opts);

/// Writes features (named from feature_names or x0..), then a `label` or
/// `target` column. Values use round-trip precision.
std::string task_to_csv(const TabularTask& task);

}  // namespace linpfn
