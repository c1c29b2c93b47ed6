// Copyright 2026 the biosift authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "biosift/corpus.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace biosift {

// Outcome of parsing one model generation. entities absent = parse
// failure (scored as an empty prediction, tallied separately);
// dropped counts structurally invalid array elements.
struct ParsedGeneration {
    std::optional<std::set<Entity>> entities;
    std::size_t dropped = 0;

    bool failed() const { return !entities.has_value(); }
};

// Extracts the first syntactically valid JSON array from raw model output
// (code fences and surrounding prose are skipped by construction).
// Elements that are not objects with exactly the string keys "entity" and
// "name", or whose values normalize to empty, are dropped with a count.
// Never throws.
ParsedGeneration parse_generation(std::string_view raw);

struct MatchCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
};

// Exact set matching on (category, name), case-sensitive.
MatchCounts strict_match(const std::set<Entity>& pred, const std::set<Entity>& gold);

struct EvalReport {
    std::string dataset;
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double micro_f1 = 0.0;
    std::uint64_t parse_failures = 0;
    std::uint64_t n_instances = 0;
};

// Sums counts across instances, then applies
//   P = tp/(tp+fp), R = tp/(tp+fn), F1 = 2PR/(P+R)
// with 0 whenever a denominator is 0.
EvalReport micro_aggregate(const std::string& dataset, const std::vector<MatchCounts>& per_instance,
                           std::uint64_t parse_failures = 0);

// Predictions input: JSONL {"id": str, "generation": str}.
struct PredictionLine {
    std::string id;
    std::string generation;
};

std::vector<PredictionLine> predictions_from_jsonl(std::string_view bytes);

// Scores generations against gold instances of one dataset. Every gold id
// must be covered or the prediction is counted as a parse failure (scored
// empty); prediction ids with no gold instance are data errors.
EvalReport evaluate_dataset(const std::vector<RawInstance>& gold,
                            const std::vector<PredictionLine>& predictions);

// Gold entity set of one instance under canonical normalization (the same
// deduplication used when samples are built).
std::set<Entity> gold_entity_set(const RawInstance& instance);

std::string reports_to_json(const std::vector<EvalReport>& reports, const std::string& config_hash,
                            std::uint64_t seed);
std::vector<EvalReport> reports_from_json(std::string_view bytes);

// Text table with the per-dataset Precision / Recall / Micro-F1 columns,
// percentages to two decimals.
std::string render_report_table(const std::vector<EvalReport>& reports);

// Fixed two-decimal percent formatting (locale-independent), e.g. 0.8829
// -> "88.29".
std::string format_percent(double fraction);

// rho-sweep grid: rows = rho, columns = dataset, cells = micro-F1 in
// percent (2 decimals), blank where a cell was not evaluated.
struct SweepCell {
    std::string dataset;
    double rho = 0.0;
    EvalReport report;
};

std::string sweep_grid_csv(const std::vector<SweepCell>& cells);
std::string sweep_grid_json(const std::vector<SweepCell>& cells, const std::string& config_hash,
                            std::uint64_t seed);

}  // namespace biosift
