// Copyright 2026 the biosift authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "biosift/corpus.hpp"
#include "biosift/curation.hpp"
#include "biosift/ngram.hpp"
#include "biosift/remote_lm.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace biosift {

struct DatasetSpec {
    std::string name;
    std::string format = "bio";  // "bio" | "gold_jsonl"
    std::filesystem::path train_path;
    std::filesystem::path test_path;         // optional
    std::filesystem::path labels_path;
    std::filesystem::path predictions_path;  // optional; enables the evaluate stage
    std::map<std::string, std::string> category_map;
    BioMode bio_mode = BioMode::lenient;
};

struct NgramSpec {
    int order = 3;
    NgramUnit unit = NgramUnit::chars;
    double smoothing_k = 0.5;
    // "self" fits on the run's rendered prompt+target texts; otherwise a
    // path to a plain-text corpus, one document per line.
    std::string corpus = "self";
};

// Desk-scale weak-to-strong demonstration: a low-order model fit on a
// held-out slice scores and curates the rest; higher-order models fit on
// curated vs full data are compared by held-out perplexity.
struct DemoSpec {
    bool enabled = false;
    int weak_order = 2;
    int strong_order = 4;
    std::size_t heldout_every = 5;  // every k-th sample goes to the held-out slice
};

struct PipelineConfig {
    std::uint64_t seed = 0;
    std::filesystem::path out_dir = "out";
    std::string prompt_style = "default";
    std::string custom_template;  // registered as style "custom" when non-empty
    BackendKind backend_kind = BackendKind::ngram;
    NgramSpec ngram;
    RemoteConfig remote;
    CurationConfig curation;
    std::string cache_file = "cache.jsonl";  // resolved against out_dir unless absolute
    bool pooled = false;                     // curate all datasets as one pool
    DemoSpec demo;
    std::vector<DatasetSpec> datasets;

    // Hash of the semantic configuration (no filesystem paths, which would
    // break byte-reproducibility across checkouts). Embedded in every
    // manifest and report.
    std::string config_hash() const;

    std::string effective_style() const;
    void validate() const;  // referenced paths exist, knobs in range
};

// Declarative JSON config; relative paths are resolved against the config
// file's directory. Unknown keys are rejected to catch typos.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

std::vector<RawInstance> ingest_dataset_file(const DatasetSpec& spec,
                                             const std::filesystem::path& path, Split split);

std::unique_ptr<LmBackend> make_backend(const PipelineConfig& config,
                                        const std::vector<InstructionSample>& self_corpus);

struct RunAllResult {
    std::filesystem::path out_dir;
    std::string config_hash;
    std::size_t datasets = 0;
    std::size_t score_failures = 0;
};

// ingest -> instructify -> score -> curate -> export (-> evaluate when
// predictions are supplied, -> demo when enabled). Writes the full output
// tree plus run_manifest.json and returns summary stats. Aborts on the
// first hard stage failure.
RunAllResult run_all(const PipelineConfig& config);

// Per-rho curation sweep over already-scored samples: one manifest/export
// tree per rho under out_dir/sweep/. Kept sets are nested across rhos by
// construction.
void run_curation_sweep(const PipelineConfig& config, const std::vector<double>& rhos);

}  // namespace biosift
