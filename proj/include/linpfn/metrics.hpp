// Copyright 2026 The linpfn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "linpfn/matrix.hpp"

namespace linpfn {

std::vector<std::size_t> argmax_rows(const Matrix& proba);

/// Fraction of rows whose argmax equals the label.
double accuracy(const Matrix& proba, std::span<const std::size_t> labels);

/// Mann–Whitney AUC of `scores` for rows labelled `positive_class` against
/// all other rows; ties count one half. NaN when either side is empty.
double binary_auc(std::span<const double> scores, std::span<const std::size_t> labels, std::size_t positive_class);

/// Binary AUC on column 1 for two classes; one-vs-rest macro average otherwise
/// (classes absent from `labels` are skipped).
double roc_auc(const Matrix& proba, std::span<const std::size_t> labels);

/// 1 − SSE/SST; SST about the mean of `truth`.
double r2_score(std::span<const double> pred, std::span<const double> truth);

}  // namespace linpfn
