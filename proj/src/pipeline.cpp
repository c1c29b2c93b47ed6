// Copyright 2026 the biosift authors
// SPDX-License-Identifier: Apache-2.0
#include "biosift/pipeline.hpp"

#include "biosift/evaluation.hpp"
#include "biosift/hash.hpp"
#include "biosift/ifd.hpp"
#include "biosift/io.hpp"
#include "biosift/logging.hpp"
#include "biosift/version.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace biosift {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::filesystem::path& p) {
    if (p.empty() || p.is_absolute()) return p;
    return base / p;
}

void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed,
                         const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        if (std::find_if(allowed.begin(), allowed.end(),
                         [&](const char* k) { return key == k; }) == allowed.end()) {
            throw UsageError("config: unknown key '" + key + "' in " + where);
        }
    }
}

}  // namespace

std::string PipelineConfig::effective_style() const {
    if (!custom_template.empty()) {
        register_prompt_style("custom", custom_template);
        return "custom";
    }
    return prompt_style;
}

std::string PipelineConfig::config_hash() const {
    // Semantic knobs only. Filesystem paths are deliberately excluded so
    // the hash (and everything embedding it) is identical across checkouts.
    ordered_json j;
    j["v"] = 1;
    j["seed"] = seed;
    j["prompt_style"] = prompt_style;
    j["custom_template"] = custom_template;
    if (backend_kind == BackendKind::ngram) {
        j["backend"] = ordered_json{{"kind", "ngram"},
                                    {"order", ngram.order},
                                    {"unit", to_string(ngram.unit)},
                                    {"k_bits", double_bits_hex(ngram.smoothing_k)},
                                    {"corpus", ngram.corpus == "self" ? "self" : "external"}};
    } else {
        j["backend"] = ordered_json{{"kind", "remote"},
                                    {"endpoint", remote.endpoint + remote.path},
                                    {"model", remote.model}};
    }
    j["curation"] = ordered_json{{"rho_bits", double_bits_hex(curation.rho)},
                                 {"rho_base", to_string(curation.rho_base)},
                                 {"cutoff_bits", double_bits_hex(curation.ifd_cutoff)}};
    j["pooled"] = pooled;
    j["demo"] = ordered_json{{"enabled", demo.enabled},
                             {"weak_order", demo.weak_order},
                             {"strong_order", demo.strong_order},
                             {"heldout_every", demo.heldout_every}};
    ordered_json specs = ordered_json::array();
    for (const auto& d : datasets) {
        ordered_json s;
        s["name"] = d.name;
        s["format"] = d.format;
        s["bio_mode"] = d.bio_mode == BioMode::strict ? "strict" : "lenient";
        s["category_map"] = d.category_map;
        s["has_test"] = !d.test_path.empty();
        s["has_predictions"] = !d.predictions_path.empty();
        specs.push_back(std::move(s));
    }
    j["datasets"] = std::move(specs);
    return hex_digest(j.dump());
}

void PipelineConfig::validate() const {
    if (datasets.empty()) throw UsageError("config: no datasets");
    std::set<std::string> names;
    for (const auto& d : datasets) {
        if (d.name.empty()) throw UsageError("config: dataset with empty name");
        if (!names.insert(d.name).second) throw UsageError("config: duplicate dataset " + d.name);
        if (d.format != "bio" && d.format != "gold_jsonl") {
            throw UsageError("config: dataset " + d.name + ": unknown format " + d.format);
        }
        for (const auto& [label, path] :
             std::initializer_list<std::pair<const char*, const std::filesystem::path*>>{
                 {"train", &d.train_path}, {"labels", &d.labels_path}}) {
            if (path->empty()) {
                throw UsageError("config: dataset " + d.name + ": " + label + " path missing");
            }
        }
        for (const auto* p : {&d.train_path, &d.test_path, &d.labels_path, &d.predictions_path}) {
            if (!p->empty() && !std::filesystem::exists(*p)) {
                throw UsageError("config: path does not exist: " + p->string());
            }
        }
    }
    curation.validate();
    if (backend_kind == BackendKind::ngram) {
        if (ngram.order < 1) throw UsageError("config: ngram order must be >= 1");
        if (!(ngram.smoothing_k > 0.0)) throw UsageError("config: smoothing_k must be > 0");
        if (ngram.corpus != "self" && !std::filesystem::exists(ngram.corpus)) {
            throw UsageError("config: ngram corpus file does not exist: " + ngram.corpus);
        }
    } else {
        if (remote.endpoint.empty() || remote.model.empty()) {
            throw UsageError("config: remote backend needs endpoint and model");
        }
    }
    if (demo.enabled) {
        if (demo.weak_order < 1 || demo.strong_order < 1) {
            throw UsageError("config: demo n-gram orders must be >= 1");
        }
        if (demo.heldout_every < 2) throw UsageError("config: demo heldout_every must be >= 2");
    }
    if (custom_template.empty() && !prompt_style_exists(prompt_style)) {
        throw UsageError("config: unknown prompt style " + prompt_style);
    }
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
    json j = json::parse(read_file(path), nullptr, false);
    if (j.is_discarded()) throw UsageError("config " + path.string() + ": invalid JSON");
    const std::filesystem::path base = path.parent_path();

    reject_unknown_keys(j,
                        {"seed", "out_dir", "prompt", "backend", "curation", "cache_file", "pooled",
                         "demo", "datasets"},
                        "top level");
    PipelineConfig config;
    try {
        config.seed = j.value("seed", 0ull);
        config.out_dir = resolve(base, j.value("out_dir", std::string("out")));
        if (j.contains("prompt")) {
            reject_unknown_keys(j["prompt"], {"style", "custom_template"}, "prompt");
            config.prompt_style = j["prompt"].value("style", std::string("default"));
            config.custom_template = j["prompt"].value("custom_template", std::string());
        }
        if (j.contains("backend")) {
            const auto& b = j["backend"];
            reject_unknown_keys(b, {"kind", "ngram", "remote"}, "backend");
            config.backend_kind = backend_kind_from_string(b.value("kind", std::string("ngram")));
            if (b.contains("ngram")) {
                const auto& n = b["ngram"];
                reject_unknown_keys(n, {"order", "unit", "smoothing_k", "corpus"}, "backend.ngram");
                config.ngram.order = n.value("order", 3);
                config.ngram.unit = ngram_unit_from_string(n.value("unit", std::string("char")));
                config.ngram.smoothing_k = n.value("smoothing_k", 0.5);
                config.ngram.corpus = n.value("corpus", std::string("self"));
                if (config.ngram.corpus != "self") {
                    config.ngram.corpus = resolve(base, config.ngram.corpus).string();
                }
            }
            if (b.contains("remote")) {
                const auto& r = b["remote"];
                reject_unknown_keys(r,
                                    {"endpoint", "path", "model", "auth_env", "max_inflight",
                                     "timeout_s", "retries", "max_context_chars", "check_drift"},
                                    "backend.remote");
                config.remote.endpoint = r.value("endpoint", std::string());
                config.remote.path = r.value("path", std::string("/v1/completions"));
                config.remote.model = r.value("model", std::string());
                config.remote.auth_env = r.value("auth_env", std::string());
                config.remote.max_inflight = r.value("max_inflight", std::size_t{4});
                config.remote.timeout_s = r.value("timeout_s", 30);
                config.remote.retries = r.value("retries", 3);
                config.remote.max_context_chars = r.value("max_context_chars", std::size_t{0});
                config.remote.check_drift = r.value("check_drift", false);
            }
        }
        if (j.contains("curation")) {
            const auto& c = j["curation"];
            reject_unknown_keys(c, {"rho", "rho_base", "ifd_cutoff"}, "curation");
            config.curation.rho = c.value("rho", 0.5);
            config.curation.rho_base =
                rho_base_from_string(c.value("rho_base", std::string("post_discard")));
            config.curation.ifd_cutoff = c.value("ifd_cutoff", 1.0);
        }
        config.cache_file = j.value("cache_file", std::string("cache.jsonl"));
        config.pooled = j.value("pooled", false);
        if (j.contains("demo")) {
            const auto& d = j["demo"];
            reject_unknown_keys(d, {"enabled", "weak_order", "strong_order", "heldout_every"},
                                "demo");
            config.demo.enabled = d.value("enabled", false);
            config.demo.weak_order = d.value("weak_order", 2);
            config.demo.strong_order = d.value("strong_order", 4);
            config.demo.heldout_every = d.value("heldout_every", std::size_t{5});
        }
        for (const auto& d : j.value("datasets", json::array())) {
            reject_unknown_keys(d,
                                {"name", "format", "train_path", "test_path", "labels_path",
                                 "predictions_path", "category_map", "bio_mode"},
                                "datasets[]");
            DatasetSpec spec;
            spec.name = d.at("name").get<std::string>();
            spec.format = d.value("format", std::string("bio"));
            spec.train_path = resolve(base, d.at("train_path").get<std::string>());
            if (d.contains("test_path")) {
                spec.test_path = resolve(base, d.at("test_path").get<std::string>());
            }
            spec.labels_path = resolve(base, d.at("labels_path").get<std::string>());
            if (d.contains("predictions_path")) {
                spec.predictions_path = resolve(base, d.at("predictions_path").get<std::string>());
            }
            if (d.contains("category_map")) {
                for (const auto& [k, v] : d.at("category_map").items()) {
                    spec.category_map[k] = v.get<std::string>();
                }
            }
            const std::string mode = d.value("bio_mode", std::string("lenient"));
            if (mode != "lenient" && mode != "strict") {
                throw UsageError("config: bio_mode must be lenient or strict");
            }
            spec.bio_mode = mode == "strict" ? BioMode::strict : BioMode::lenient;
            config.datasets.push_back(std::move(spec));
        }
    } catch (const json::exception& e) {
        throw UsageError("config " + path.string() + ": " + e.what());
    }
    return config;
}

std::vector<RawInstance> ingest_dataset_file(const DatasetSpec& spec,
                                             const std::filesystem::path& path, Split split) {
    const std::string bytes = read_file(path);
    std::vector<RawInstance> instances;
    if (spec.format == "bio") {
        BioParseResult parsed = parse_bio(bytes, spec.name, split, spec.category_map, spec.bio_mode);
        if (!parsed.warnings.empty()) {
            log::event("ingest.warnings",
                       {{"dataset", spec.name}, {"count", parsed.warnings.size()}});
        }
        instances = std::move(parsed.instances);
    } else {
        instances = parse_gold_jsonl(bytes, spec.name, split);
    }
    log::event("stage.ingest",
               {{"dataset", spec.name}, {"split", to_string(split)}, {"n", instances.size()}});
    return instances;
}

std::unique_ptr<LmBackend> make_backend(const PipelineConfig& config,
                                        const std::vector<InstructionSample>& self_corpus) {
    if (config.backend_kind == BackendKind::remote) {
        return std::make_unique<RemoteBackend>(config.remote);
    }
    std::vector<std::string> docs;
    const std::string style = config.effective_style();
    if (config.ngram.corpus == "self") {
        docs.reserve(self_corpus.size());
        for (const auto& s : self_corpus) docs.push_back(render_prompt(s, style) + s.target);
    } else {
        std::istringstream in(read_file(config.ngram.corpus));
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) docs.push_back(line);
        }
    }
    NgramModel model =
        fit_ngram(docs, config.ngram.order, config.ngram.smoothing_k, config.ngram.unit);
    log::event("backend.fitted", {{"model", model.id().model_name},
                                  {"fingerprint", model.id().fingerprint},
                                  {"docs", docs.size()}});
    return std::make_unique<NgramModel>(std::move(model));
}

namespace {

// Collects (relative name, content hash) of every written file for the
// run manifest.
class OutputTree {
public:
    explicit OutputTree(std::filesystem::path root) : root_(std::move(root)) {}

    void write(const std::string& rel_name, std::string_view bytes) {
        write_file(root_ / rel_name, bytes);
        hashes_[rel_name] = hex_digest(bytes);
    }

    void note_external(const std::string& rel_name, const std::filesystem::path& path) {
        hashes_[rel_name] = hex_digest(read_file(path));
    }

    const std::map<std::string, std::string>& hashes() const { return hashes_; }
    const std::filesystem::path& root() const { return root_; }

private:
    std::filesystem::path root_;
    std::map<std::string, std::string> hashes_;
};

struct CuratedDataset {
    std::string stem;
    CurationManifest manifest;
    std::vector<InstructionSample> composed;
    std::size_t score_failures = 0;
};

// score -> superfilter -> compose for one pool of samples.
CuratedDataset curate_pool(const std::string& stem, const std::vector<InstructionSample>& samples,
                           const LmBackend& backend, const std::string& style,
                           const CurationConfig& curation, std::uint64_t seed,
                           const std::string& config_hash, ScoreCache& cache, OutputTree& tree) {
    auto [positives, negatives] = partition(samples);
    ScoreBatchResult batch = score_batch(positives, backend, style, cache);
    tree.write("scores_" + stem + ".jsonl", records_to_jsonl(batch.records));
    if (!batch.failures.empty()) {
        for (const auto& f : batch.failures) {
            log::event("score.failure", {{"id", f.sample_id}, {"reason", f.reason}});
        }
    }
    log::event("stage.score", {{"stem", stem},
                               {"scored", batch.records.size()},
                               {"failed", batch.failures.size()},
                               {"backend_calls", batch.backend_calls},
                               {"cache_hits", batch.cache_hits}});

    // Unscorable samples are flagged and excluded from curation.
    std::vector<InstructionSample> scored_positives;
    {
        std::set<std::string> failed_ids;
        for (const auto& f : batch.failures) failed_ids.insert(f.sample_id);
        for (auto& p : positives) {
            if (!failed_ids.contains(p.id)) scored_positives.push_back(std::move(p));
        }
    }

    SuperfilterResult sf = superfilter(batch.records, scored_positives, curation);
    const std::uint64_t shuffle_seed = seed ^ fnv1a64(stem);

    CuratedDataset out;
    out.stem = stem;
    out.score_failures = batch.failures.size();
    out.composed = compose(sf.kept, negatives, shuffle_seed);

    CurationManifest& m = out.manifest;
    m.config = curation;
    m.backend = backend.id();
    m.counts.positives = scored_positives.size();
    m.counts.negatives = negatives.size();
    m.counts.kept_positives = sf.kept.size();
    m.counts.train = out.composed.size();
    m.quantiles = sf.quantiles;
    m.kept_positive_ids = std::move(sf.kept_ids);
    m.discarded_ge_cutoff_ids = std::move(sf.discarded_ge_cutoff_ids);
    m.below_rank_ids = std::move(sf.below_rank_ids);
    for (const auto& n : negatives) m.negative_ids.push_back(n.id);
    m.shuffle_seed = shuffle_seed;
    m.config_hash = config_hash;

    tree.write("curated_" + stem + ".jsonl", samples_to_jsonl(out.composed));
    log::event("stage.curate", {{"stem", stem},
                                {"kept", m.counts.kept_positives},
                                {"negatives", m.counts.negatives},
                                {"train", m.counts.train}});
    return out;
}

void export_curated(const CuratedDataset& curated, OutputTree& tree) {
    const std::string stem = "sft_" + curated.stem;
    export_sft(curated.composed, curated.manifest, tree.root(), stem);
    tree.note_external(stem + ".jsonl", tree.root() / (stem + ".jsonl"));
    tree.note_external(stem + "_manifest.json", tree.root() / (stem + "_manifest.json"));
    tree.note_external(stem + "_training_config.json",
                       tree.root() / (stem + "_training_config.json"));
}

struct DemoOutcome {
    CurationManifest manifest;
    double ppl_strong_curated = 0.0;
    double ppl_strong_full = 0.0;
};

double corpus_perplexity(const LmBackend& model, const std::vector<std::string>& texts) {
    double total_nll = 0.0;
    double total_len = 0.0;
    for (const auto& t : texts) {
        if (t.empty()) continue;
        const ScoredSequence scores = model.score_conditional("", t);
        total_nll += scores.total_nll();
        total_len += static_cast<double>(scores.scored_len());
    }
    if (total_len == 0.0) throw DataError("demo: held-out slice has no scorable text");
    return std::exp(total_nll / total_len);
}

DemoOutcome run_demo(const PipelineConfig& config, const std::vector<InstructionSample>& all_samples,
                     const std::string& style, const std::string& config_hash, ScoreCache& cache,
                     OutputTree& tree) {
    // Held-out slice: every k-th sample. The weak model is fit there, and
    // the strong models are compared there, so neither sees its own
    // training data at evaluation time.
    std::vector<InstructionSample> heldout;
    std::vector<InstructionSample> core;
    for (std::size_t i = 0; i < all_samples.size(); ++i) {
        (i % config.demo.heldout_every == 0 ? heldout : core).push_back(all_samples[i]);
    }
    if (heldout.empty() || core.empty()) throw DataError("demo: corpus too small to slice");

    auto rendered = [&](const std::vector<InstructionSample>& xs) {
        std::vector<std::string> texts;
        texts.reserve(xs.size());
        for (const auto& s : xs) texts.push_back(render_prompt(s, style) + s.target);
        return texts;
    };

    NgramModel weak = fit_ngram(rendered(heldout), config.demo.weak_order, 0.5, NgramUnit::chars);
    log::event("demo.weak_fitted", {{"fingerprint", weak.id().fingerprint},
                                    {"heldout", heldout.size()},
                                    {"core", core.size()}});

    CuratedDataset curated = curate_pool("demo", core, weak, style, config.curation, config.seed,
                                         config_hash, cache, tree);
    export_curated(curated, tree);

    NgramModel strong_curated =
        fit_ngram(rendered(curated.composed), config.demo.strong_order, 0.5, NgramUnit::chars);
    NgramModel strong_full =
        fit_ngram(rendered(core), config.demo.strong_order, 0.5, NgramUnit::chars);

    DemoOutcome outcome;
    outcome.manifest = curated.manifest;
    const std::vector<std::string> heldout_texts = rendered(heldout);
    outcome.ppl_strong_curated = corpus_perplexity(strong_curated, heldout_texts);
    outcome.ppl_strong_full = corpus_perplexity(strong_full, heldout_texts);

    ordered_json j;
    j["format"] = "biosift.demo_report";
    j["version"] = 1;
    j["weak_backend"] = ordered_json{{"kind", to_string(weak.id().kind)},
                                     {"model", weak.id().model_name},
                                     {"fingerprint", weak.id().fingerprint}};
    j["rho"] = config.curation.rho;
    j["counts"] = ordered_json{{"positives", curated.manifest.counts.positives},
                               {"negatives", curated.manifest.counts.negatives},
                               {"kept_positives", curated.manifest.counts.kept_positives},
                               {"train", curated.manifest.counts.train}};
    j["ifd_quantiles"] = ordered_json{{"n", curated.manifest.quantiles.n},
                                      {"min", curated.manifest.quantiles.min},
                                      {"q25", curated.manifest.quantiles.q25},
                                      {"q50", curated.manifest.quantiles.q50},
                                      {"q75", curated.manifest.quantiles.q75},
                                      {"max", curated.manifest.quantiles.max}};
    j["heldout"] = ordered_json{
        {"n_texts", heldout.size()},
        {"strong_order", config.demo.strong_order},
        {"strong_curated_ppl", outcome.ppl_strong_curated},
        {"strong_full_ppl", outcome.ppl_strong_full},
        {"curated_training_texts", curated.composed.size()},
        {"full_training_texts", core.size()},
    };
    j["config_hash"] = config_hash;
    j["seed"] = config.seed;
    tree.write("demo_report.json", j.dump(2) + "\n");
    log::event("demo.done", {{"ppl_curated", outcome.ppl_strong_curated},
                             {"ppl_full", outcome.ppl_strong_full}});
    return outcome;
}

struct IngestedDataset {
    DatasetSpec spec;
    LabelSet labels;
    std::vector<InstructionSample> train_samples;
    std::vector<RawInstance> test_instances;
};

std::vector<IngestedDataset> ingest_and_instructify(const PipelineConfig& config,
                                                    OutputTree& tree) {
    std::vector<IngestedDataset> out;
    for (const auto& spec : config.datasets) {
        IngestedDataset ds;
        ds.spec = spec;
        ds.labels = load_label_set(spec.labels_path.string());
        if (ds.labels.dataset != spec.name) {
            throw DataError("label set dataset '" + ds.labels.dataset + "' does not match '" +
                            spec.name + "'");
        }

        std::vector<RawInstance> train = ingest_dataset_file(spec, spec.train_path, Split::train);
        const ValidationReport report = validate_instances(train, &ds.labels);
        if (!report.ok()) {
            throw DataError("dataset " + spec.name + ": " +
                            std::to_string(report.total_violations()) + " invariant violations");
        }
        tree.write("raw_" + spec.name + "_train.jsonl", instances_to_jsonl(train));

        if (!spec.test_path.empty()) {
            ds.test_instances = ingest_dataset_file(spec, spec.test_path, Split::test);
            tree.write("raw_" + spec.name + "_test.jsonl", instances_to_jsonl(ds.test_instances));
        }

        ds.train_samples = build_samples(train, ds.labels);
        tree.write("samples_" + spec.name + ".jsonl", samples_to_jsonl(ds.train_samples));
        out.push_back(std::move(ds));
    }
    return out;
}

}  // namespace

RunAllResult run_all(const PipelineConfig& config) {
    config.validate();
    const std::string style = config.effective_style();
    const std::string config_hash = config.config_hash();
    std::filesystem::create_directories(config.out_dir);
    OutputTree tree(config.out_dir);

    std::vector<IngestedDataset> datasets = ingest_and_instructify(config, tree);

    std::vector<InstructionSample> pooled_samples;
    for (const auto& ds : datasets) {
        pooled_samples.insert(pooled_samples.end(), ds.train_samples.begin(),
                              ds.train_samples.end());
    }

    std::unique_ptr<LmBackend> backend = make_backend(config, pooled_samples);
    if (auto* ngram = dynamic_cast<const NgramModel*>(backend.get())) {
        tree.write("ngram_model.json", ngram->save_json());
    }

    const std::filesystem::path cache_path = resolve(config.out_dir, config.cache_file);
    ScoreCache cache(cache_path.string());

    RunAllResult result;
    result.out_dir = config.out_dir;
    result.config_hash = config_hash;
    result.datasets = datasets.size();

    std::vector<CuratedDataset> curated;
    if (config.pooled) {
        curated.push_back(curate_pool("pooled", pooled_samples, *backend, style, config.curation,
                                      config.seed, config_hash, cache, tree));
    } else {
        for (const auto& ds : datasets) {
            curated.push_back(curate_pool(ds.spec.name, ds.train_samples, *backend, style,
                                          config.curation, config.seed, config_hash, cache, tree));
        }
    }
    for (const auto& c : curated) {
        export_curated(c, tree);
        result.score_failures += c.score_failures;
    }

    // Evaluate supplied prediction files against test gold.
    std::vector<EvalReport> reports;
    for (const auto& ds : datasets) {
        if (ds.spec.predictions_path.empty()) continue;
        if (ds.test_instances.empty()) {
            throw DataError("dataset " + ds.spec.name + ": predictions supplied without test data");
        }
        const auto predictions = predictions_from_jsonl(read_file(ds.spec.predictions_path));
        reports.push_back(evaluate_dataset(ds.test_instances, predictions));
        log::event("stage.evaluate",
                   {{"dataset", ds.spec.name}, {"micro_f1", reports.back().micro_f1}});
    }
    if (!reports.empty()) {
        tree.write("eval_report.json", reports_to_json(reports, config_hash, config.seed));
        tree.write("eval_table.txt", render_report_table(reports));
    }

    if (config.demo.enabled) {
        run_demo(config, pooled_samples, style, config_hash, cache, tree);
    }

    cache.flush();
    if (std::filesystem::exists(cache_path)) {
        tree.note_external(cache_path.filename().string(), cache_path);
    }

    ordered_json manifest;
    manifest["format"] = "biosift.run_manifest";
    manifest["version"] = 1;
    manifest["pipeline_version"] = kVersion;
    manifest["config_hash"] = config_hash;
    manifest["seed"] = config.seed;
    manifest["prompt_style"] = style;
    manifest["backend"] = ordered_json{{"kind", to_string(backend->id().kind)},
                                       {"model", backend->id().model_name},
                                       {"fingerprint", backend->id().fingerprint}};
    ordered_json files = ordered_json::object();
    for (const auto& [name, hash] : tree.hashes()) files[name] = hash;
    manifest["files"] = std::move(files);
    write_file(config.out_dir / "run_manifest.json", manifest.dump(2) + "\n");

    log::event("stage.run_all_done",
               {{"datasets", result.datasets}, {"score_failures", result.score_failures}});
    return result;
}

void run_curation_sweep(const PipelineConfig& config, const std::vector<double>& rhos) {
    if (rhos.empty()) throw UsageError("sweep: no rho values");
    config.validate();
    const std::string style = config.effective_style();
    std::filesystem::create_directories(config.out_dir);

    OutputTree scratch(config.out_dir);
    std::vector<IngestedDataset> datasets = ingest_and_instructify(config, scratch);
    std::vector<InstructionSample> pooled_samples;
    for (const auto& ds : datasets) {
        pooled_samples.insert(pooled_samples.end(), ds.train_samples.begin(),
                              ds.train_samples.end());
    }
    std::unique_ptr<LmBackend> backend = make_backend(config, pooled_samples);
    ScoreCache cache(resolve(config.out_dir, config.cache_file).string());

    for (double rho : rhos) {
        PipelineConfig step = config;
        step.curation.rho = rho;
        // rho rendered to two decimals, dot swapped out: 0.25 -> "0p25"
        std::string tag = format_percent(rho / 100.0);
        std::replace(tag.begin(), tag.end(), '.', 'p');
        const std::filesystem::path step_dir = config.out_dir / "sweep" / ("rho_" + tag);
        std::filesystem::create_directories(step_dir);
        OutputTree step_tree(step_dir);
        const std::string step_hash = step.config_hash();

        if (config.pooled) {
            CuratedDataset c = curate_pool("pooled", pooled_samples, *backend, style, step.curation,
                                           step.seed, step_hash, cache, step_tree);
            export_curated(c, step_tree);
        } else {
            for (const auto& ds : datasets) {
                CuratedDataset c = curate_pool(ds.spec.name, ds.train_samples, *backend, style,
                                               step.curation, step.seed, step_hash, cache,
                                               step_tree);
                export_curated(c, step_tree);
            }
        }
        log::event("sweep.step_done", {{"rho", rho}, {"dir", "sweep/rho_" + tag}});
    }
    cache.flush();
}

}  // namespace biosift
