// Copyright 2026 the biosift authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "biosift/errors.hpp"

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace biosift {

// A (category, name) pair; the atom of gold and predicted annotations.
// Both fields are NFC-normalized and trimmed at construction sites.
struct Entity {
    std::string category;
    std::string name;

    friend bool operator==(const Entity&, const Entity&) = default;
    friend auto operator<=>(const Entity&, const Entity&) = default;
};

enum class Split { train, dev, test };

std::string to_string(Split split);
Split split_from_string(std::string_view s);

// One source sentence/abstract with its gold annotations, in
// first-occurrence order (duplicates preserved here; samples dedup later).
struct RawInstance {
    std::string id;
    std::string text;
    std::vector<Entity> gold;
    std::string dataset;
    Split split = Split::train;
};

// Per-dataset entity-type vocabulary plus the instruction template.
// The template must contain exactly one "{}" placeholder, which is filled
// with category_description when samples are built.
struct LabelSet {
    std::string dataset;
    std::set<std::string> categories;
    std::string instruction_template;
    std::string category_description;

    void validate() const;  // throws TemplateMismatch / DataError
};

LabelSet load_label_set(const std::string& path);

enum class BioMode {
    lenient,  // dangling I-X starts a new entity; logged
    strict,   // dangling I-X raises DanglingInside
};

struct BioWarning {
    std::size_t line;
    std::string message;
};

struct BioParseResult {
    std::vector<RawInstance> instances;
    std::vector<BioWarning> warnings;
};

// Parse token-per-line BIO/CoNLL bytes. Lines hold exactly two
// whitespace-separated fields (token, tag); blank lines separate instances;
// tags are O / B-X / I-X. CRLF input is accepted. Detokenized text joins
// tokens with single spaces, so every gold surface form is a substring of
// the text by construction. Ids are "<dataset>-<split>-<ordinal>" with a
// zero-padded ordinal.
//
// category_map translates tag suffixes to category labels. An empty map is
// the identity; a non-empty map missing a suffix raises UnknownTag.
BioParseResult parse_bio(std::string_view file_bytes, const std::string& dataset, Split split,
                         const std::map<std::string, std::string>& category_map = {},
                         BioMode mode = BioMode::lenient);

// Parse gold JSON Lines: {"id": str, "text": str,
// "entities": [{"entity": str, "name": str}]} per line.
std::vector<RawInstance> parse_gold_jsonl(std::string_view file_bytes, const std::string& dataset,
                                          Split split);

struct ValidationIssue {
    std::string id;
    std::string kind;  // "empty_name" | "empty_category" | "unknown_category" |
                       // "name_not_in_text" | "duplicate_id"
    std::string detail;
};

struct ValidationReport {
    std::size_t n_instances = 0;
    std::size_t empty_name = 0;
    std::size_t empty_category = 0;
    std::size_t unknown_category = 0;
    std::size_t name_not_in_text = 0;
    std::size_t duplicate_id = 0;
    std::vector<ValidationIssue> issues;

    bool ok() const { return issues.empty(); }
    std::size_t total_violations() const { return issues.size(); }
};

// Reporting only; never mutates input. Category membership is checked only
// when a LabelSet is supplied.
ValidationReport validate_instances(const std::vector<RawInstance>& instances,
                                    const LabelSet* labels = nullptr);

// Canonical raw-instance JSONL:
//   {"id":...,"text":...,"entities":[{"entity":...,"name":...}],"dataset":...,"split":...}
std::string instances_to_jsonl(const std::vector<RawInstance>& instances);
std::vector<RawInstance> instances_from_jsonl(std::string_view bytes);

}  // namespace biosift
