// Copyright 2026 the biosift authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "biosift/ifd.hpp"
#include "biosift/instructify.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace biosift {

// Base for the top-rho slice: post_discard takes rho of the samples that
// survive the IFD cutoff; original_pos takes rho of all positives (capped
// at the number of survivors). The two readings coexist in the source
// method, hence a knob rather than a silent choice.
enum class RhoBase { post_discard, original_pos };

std::string to_string(RhoBase base);
RhoBase rho_base_from_string(std::string_view s);

struct CurationConfig {
    double rho = 0.5;
    RhoBase rho_base = RhoBase::post_discard;
    double ifd_cutoff = 1.0;
    // Tie break is fixed: ifd descending, then sample_id ascending.

    void validate() const;
};

struct CurationCounts {
    std::uint64_t positives = 0;
    std::uint64_t negatives = 0;
    std::uint64_t kept_positives = 0;
    std::uint64_t train = 0;
};

// Nearest-rank-lower quantiles of the scored positives' IFD values.
struct IfdQuantiles {
    std::uint64_t n = 0;
    double min = 0.0, q25 = 0.0, q50 = 0.0, q75 = 0.0, max = 0.0;
};

IfdQuantiles ifd_quantiles(std::vector<double> values);

struct CurationManifest {
    CurationConfig config;
    BackendId backend;
    CurationCounts counts;
    IfdQuantiles quantiles;                          // over all scored positives
    std::vector<std::string> kept_positive_ids;      // rank order
    std::vector<std::string> discarded_ge_cutoff_ids;  // id order
    std::vector<std::string> below_rank_ids;           // rank order past k
    std::vector<std::string> negative_ids;             // input order
    std::uint64_t shuffle_seed = 0;
    std::string config_hash;  // pipeline config fingerprint
};

std::string manifest_to_json(const CurationManifest& manifest);
CurationManifest manifest_from_json(std::string_view bytes);

// Split by target == "[]" exactly; order within each part preserved.
std::pair<std::vector<InstructionSample>, std::vector<InstructionSample>> partition(
    const std::vector<InstructionSample>& samples);

struct SuperfilterResult {
    std::vector<InstructionSample> kept;  // rank order
    std::vector<std::string> kept_ids;
    std::vector<std::string> discarded_ge_cutoff_ids;
    std::vector<std::string> below_rank_ids;
    IfdQuantiles quantiles;
};

// Discard records with ifd >= cutoff, sort survivors by (ifd desc, id asc),
// keep the top floor(rho * base). Every positive needs exactly one record.
SuperfilterResult superfilter(const std::vector<IfdRecord>& records,
                              const std::vector<InstructionSample>& positives,
                              const CurationConfig& config);

// Kept positives followed by all negatives, then a seeded permutation.
std::vector<InstructionSample> compose(const std::vector<InstructionSample>& kept,
                                       const std::vector<InstructionSample>& negatives,
                                       std::uint64_t seed);

// Writes the SFT JSONL, the curation manifest, and a training-config
// manifest (advisory hyperparameters for the external fine-tuning step)
// as <stem>.jsonl / <stem>_manifest.json / <stem>_training_config.json.
void export_sft(const std::vector<InstructionSample>& dataset, const CurationManifest& manifest,
                const std::filesystem::path& out_dir, const std::string& stem);

std::string training_config_json(std::uint64_t n_samples, const std::string& sft_filename,
                                 const std::string& config_hash, std::uint64_t seed);

}  // namespace biosift
