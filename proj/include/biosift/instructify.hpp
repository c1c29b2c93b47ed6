// Copyright 2026 the biosift authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "biosift/corpus.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace biosift {

// Instruction-following sample with a JSON-array target. target is the
// canonical serialization of the deduplicated gold entities; "[]" marks a
// negative sample.
struct InstructionSample {
    std::string id;
    std::string instruction;
    std::string input_text;
    std::string target;
    bool is_positive = false;
    std::string dataset;
    Split split = Split::train;
};

// Canonical JSON: array of {"entity":...,"name":...} objects in input
// order, key order fixed, no insignificant whitespace, raw UTF-8, only
// JSON-mandatory escapes. Empty list -> "[]". Targets and cache keys are
// built from this exact byte form, so it must never drift.
std::string serialize_entities(const std::vector<Entity>& entities);

// Strict inverse of serialize_entities. Throws DataError unless the input
// is a JSON array whose elements carry exactly the string keys
// "entity" and "name".
std::vector<Entity> parse_entities(std::string_view target);

InstructionSample build_sample(const RawInstance& instance, const LabelSet& labels);

std::vector<InstructionSample> build_samples(const std::vector<RawInstance>& instances,
                                             const LabelSet& labels);

// --- prompt styles -------------------------------------------------------
//
// A style is a layout template with one {instruction} and one {input}
// placeholder. "default" renders
//   <instruction>\n\nText: <input>\n\nEntities:
// and "minimal" is plain concatenation with a newline.

void register_prompt_style(const std::string& name, const std::string& layout);
bool prompt_style_exists(const std::string& name);

std::string render_prompt(const InstructionSample& sample, const std::string& style);

// --- file formats --------------------------------------------------------

// Full-fidelity intermediate samples file:
//   {"id","dataset","split","instruction","input","output","is_positive"}
std::string samples_to_jsonl(const std::vector<InstructionSample>& samples);
std::vector<InstructionSample> samples_from_jsonl(std::string_view bytes);

// SFT export consumed by external fine-tuning frameworks:
//   {"id","instruction","input","output"}
std::string samples_to_sft_jsonl(const std::vector<InstructionSample>& samples);

}  // namespace biosift
