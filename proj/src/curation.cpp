// Copyright 2026 the biosift authors
// SPDX-License-Identifier: Apache-2.0
#include "biosift/curation.hpp"

#include "biosift/errors.hpp"
#include "biosift/io.hpp"
#include "biosift/logging.hpp"
#include "biosift/rng.hpp"
#include "biosift/version.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

namespace biosift {

using nlohmann::json;
using nlohmann::ordered_json;

std::string to_string(RhoBase base) {
    return base == RhoBase::post_discard ? "post_discard" : "original_pos";
}

RhoBase rho_base_from_string(std::string_view s) {
    if (s == "post_discard") return RhoBase::post_discard;
    if (s == "original_pos") return RhoBase::original_pos;
    throw DataError("unknown rho_base: " + std::string(s));
}

void CurationConfig::validate() const {
    if (!(rho >= 0.0 && rho <= 1.0)) throw DataError("rho must be in [0,1]");
    if (!(ifd_cutoff > 0.0)) throw DataError("ifd_cutoff must be > 0");
}

IfdQuantiles ifd_quantiles(std::vector<double> values) {
    IfdQuantiles q;
    q.n = values.size();
    if (values.empty()) return q;
    std::sort(values.begin(), values.end());
    auto at = [&](double p) {
        const auto idx = static_cast<std::size_t>(std::floor(p * static_cast<double>(values.size() - 1)));
        return values[idx];
    };
    q.min = values.front();
    q.q25 = at(0.25);
    q.q50 = at(0.50);
    q.q75 = at(0.75);
    q.max = values.back();
    return q;
}

std::pair<std::vector<InstructionSample>, std::vector<InstructionSample>> partition(
    const std::vector<InstructionSample>& samples) {
    std::vector<InstructionSample> positives;
    std::vector<InstructionSample> negatives;
    for (const auto& s : samples) {
        (s.target != "[]" ? positives : negatives).push_back(s);
    }
    return {std::move(positives), std::move(negatives)};
}

SuperfilterResult superfilter(const std::vector<IfdRecord>& records,
                              const std::vector<InstructionSample>& positives,
                              const CurationConfig& config) {
    config.validate();

    std::unordered_map<std::string, const IfdRecord*> by_id;
    for (const auto& r : records) {
        if (!by_id.emplace(r.sample_id, &r).second) {
            throw DuplicateScore("duplicate IFD record for sample " + r.sample_id);
        }
    }
    std::unordered_map<std::string, const InstructionSample*> positive_by_id;
    for (const auto& p : positives) positive_by_id[p.id] = &p;
    if (by_id.size() > positive_by_id.size()) {
        log::event("curation.unused_records",
                   {{"count", by_id.size() - positive_by_id.size()}});
    }

    struct Scored {
        double ifd;
        const InstructionSample* sample;
    };
    std::vector<Scored> eligible;
    SuperfilterResult result;
    std::vector<double> all_ifds;
    all_ifds.reserve(positives.size());

    for (const auto& p : positives) {
        auto it = by_id.find(p.id);
        if (it == by_id.end()) throw MissingScore("positive sample " + p.id + " has no IFD record");
        const double ifd = it->second->ifd;
        all_ifds.push_back(ifd);
        if (ifd < config.ifd_cutoff) {
            eligible.push_back({ifd, &p});
        } else {
            result.discarded_ge_cutoff_ids.push_back(p.id);
        }
    }
    std::sort(result.discarded_ge_cutoff_ids.begin(), result.discarded_ge_cutoff_ids.end());
    result.quantiles = ifd_quantiles(std::move(all_ifds));

    std::sort(eligible.begin(), eligible.end(), [](const Scored& a, const Scored& b) {
        if (a.ifd != b.ifd) return a.ifd > b.ifd;
        return a.sample->id < b.sample->id;
    });

    const std::size_t base =
        config.rho_base == RhoBase::post_discard ? eligible.size() : positives.size();
    std::size_t k = static_cast<std::size_t>(
        std::floor(config.rho * static_cast<double>(base)));
    k = std::min(k, eligible.size());

    result.kept.reserve(k);
    for (std::size_t i = 0; i < eligible.size(); ++i) {
        if (i < k) {
            result.kept.push_back(*eligible[i].sample);
            result.kept_ids.push_back(eligible[i].sample->id);
        } else {
            result.below_rank_ids.push_back(eligible[i].sample->id);
        }
    }
    return result;
}

std::vector<InstructionSample> compose(const std::vector<InstructionSample>& kept,
                                       const std::vector<InstructionSample>& negatives,
                                       std::uint64_t seed) {
    std::unordered_set<std::string> kept_ids;
    for (const auto& s : kept) kept_ids.insert(s.id);
    for (const auto& s : negatives) {
        if (kept_ids.contains(s.id)) {
            throw IdCollision("sample id in both kept and negative sets: " + s.id);
        }
    }
    std::vector<InstructionSample> out;
    out.reserve(kept.size() + negatives.size());
    out.insert(out.end(), kept.begin(), kept.end());
    out.insert(out.end(), negatives.begin(), negatives.end());
    seeded_shuffle(out, seed);
    return out;
}

namespace {

ordered_json config_to_json(const CurationConfig& config) {
    return ordered_json{{"rho", config.rho},
                        {"rho_base", to_string(config.rho_base)},
                        {"ifd_cutoff", config.ifd_cutoff},
                        {"tie_break", "ifd_desc,sample_id_asc"}};
}

ordered_json quantiles_to_json(const IfdQuantiles& q) {
    return ordered_json{{"n", q.n},   {"min", q.min}, {"q25", q.q25},
                        {"q50", q.q50}, {"q75", q.q75}, {"max", q.max}};
}

}  // namespace

std::string manifest_to_json(const CurationManifest& manifest) {
    ordered_json j;
    j["format"] = "biosift.curation_manifest";
    j["version"] = 1;
    j["pipeline_version"] = kVersion;
    j["config"] = config_to_json(manifest.config);
    j["backend"] = ordered_json{{"kind", to_string(manifest.backend.kind)},
                                {"model", manifest.backend.model_name},
                                {"fingerprint", manifest.backend.fingerprint}};
    j["counts"] = ordered_json{{"positives", manifest.counts.positives},
                               {"negatives", manifest.counts.negatives},
                               {"kept_positives", manifest.counts.kept_positives},
                               {"train", manifest.counts.train}};
    j["ifd_quantiles"] = quantiles_to_json(manifest.quantiles);
    j["kept_positive_ids"] = manifest.kept_positive_ids;
    j["discarded_ge_cutoff_ids"] = manifest.discarded_ge_cutoff_ids;
    j["below_rank_ids"] = manifest.below_rank_ids;
    j["negative_ids"] = manifest.negative_ids;
    j["shuffle_seed"] = manifest.shuffle_seed;
    j["config_hash"] = manifest.config_hash;
    return j.dump(2) + "\n";
}

CurationManifest manifest_from_json(std::string_view bytes) {
    json j = json::parse(bytes, nullptr, false);
    if (j.is_discarded()) throw DataError("curation manifest: invalid JSON");
    try {
        CurationManifest m;
        const auto& c = j.at("config");
        m.config.rho = c.at("rho").get<double>();
        m.config.rho_base = rho_base_from_string(c.at("rho_base").get<std::string>());
        m.config.ifd_cutoff = c.at("ifd_cutoff").get<double>();
        const auto& b = j.at("backend");
        m.backend.kind = backend_kind_from_string(b.at("kind").get<std::string>());
        m.backend.model_name = b.at("model").get<std::string>();
        m.backend.fingerprint = b.at("fingerprint").get<std::string>();
        const auto& n = j.at("counts");
        m.counts.positives = n.at("positives").get<std::uint64_t>();
        m.counts.negatives = n.at("negatives").get<std::uint64_t>();
        m.counts.kept_positives = n.at("kept_positives").get<std::uint64_t>();
        m.counts.train = n.at("train").get<std::uint64_t>();
        const auto& q = j.at("ifd_quantiles");
        m.quantiles.n = q.at("n").get<std::uint64_t>();
        m.quantiles.min = q.at("min").get<double>();
        m.quantiles.q25 = q.at("q25").get<double>();
        m.quantiles.q50 = q.at("q50").get<double>();
        m.quantiles.q75 = q.at("q75").get<double>();
        m.quantiles.max = q.at("max").get<double>();
        m.kept_positive_ids = j.at("kept_positive_ids").get<std::vector<std::string>>();
        m.discarded_ge_cutoff_ids = j.at("discarded_ge_cutoff_ids").get<std::vector<std::string>>();
        m.below_rank_ids = j.at("below_rank_ids").get<std::vector<std::string>>();
        m.negative_ids = j.at("negative_ids").get<std::vector<std::string>>();
        m.shuffle_seed = j.at("shuffle_seed").get<std::uint64_t>();
        m.config_hash = j.value("config_hash", "");
        return m;
    } catch (const json::exception& e) {
        throw DataError(std::string("curation manifest: ") + e.what());
    }
}

std::string training_config_json(std::uint64_t n_samples, const std::string& sft_filename,
                                 const std::string& config_hash, std::uint64_t seed) {
    // Advisory hyperparameters for the downstream fine-tuning framework;
    // nothing in this toolchain executes them.
    ordered_json j;
    j["format"] = "biosift.training_config";
    j["version"] = 1;
    j["dataset"] = ordered_json{{"file", sft_filename},
                                {"n_samples", n_samples},
                                {"schema", ordered_json::array({"id", "instruction", "input", "output"})}};
    j["hyperparameters"] = ordered_json{{"epochs", 3.0},
                                        {"max_seq_length", 128},
                                        {"peak_learning_rate", 1.0e-4},
                                        {"lr_schedule", "cosine"},
                                        {"mixed_precision", "bf16"},
                                        {"peft", "lora"}};
    j["config_hash"] = config_hash;
    j["seed"] = seed;
    return j.dump(2) + "\n";
}

void export_sft(const std::vector<InstructionSample>& dataset, const CurationManifest& manifest,
                const std::filesystem::path& out_dir, const std::string& stem) {
    if (manifest.counts.train != manifest.counts.kept_positives + manifest.counts.negatives) {
        throw DataError("manifest counts violate train = kept_positives + negatives");
    }
    write_file(out_dir / (stem + ".jsonl"), samples_to_sft_jsonl(dataset));
    write_file(out_dir / (stem + "_manifest.json"), manifest_to_json(manifest));
    write_file(out_dir / (stem + "_training_config.json"),
               training_config_json(dataset.size(), stem + ".jsonl", manifest.config_hash,
                                    manifest.shuffle_seed));
    log::event("export.done", {{"stem", stem}, {"n", dataset.size()}});
}

}  // namespace biosift
