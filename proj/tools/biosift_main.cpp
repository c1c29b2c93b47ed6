// Copyright 2026 the biosift authors
// SPDX-License-Identifier: Apache-2.0
//
// biosift: curate biomedical NER corpora into instruction-tuning data.
// Subcommands mirror the pipeline stages; every config key has a flag
// override, and flags win.

#include "biosift/curation.hpp"
#include "biosift/evaluation.hpp"
#include "biosift/hash.hpp"
#include "biosift/ifd.hpp"
#include "biosift/io.hpp"
#include "biosift/logging.hpp"
#include "biosift/pipeline.hpp"
#include "biosift/version.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>
#include <optional>

namespace {

using namespace biosift;
using nlohmann::ordered_json;

std::map<std::string, std::string> parse_category_map(const std::vector<std::string>& pairs) {
    std::map<std::string, std::string> out;
    for (const auto& p : pairs) {
        const std::size_t eq = p.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == p.size()) {
            throw UsageError("bad --category-map entry '" + p + "', expected TAG=CATEGORY");
        }
        out[p.substr(0, eq)] = p.substr(eq + 1);
    }
    return out;
}

std::vector<double> parse_rho_list(const std::string& csv) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= csv.size()) {
        std::size_t comma = csv.find(',', pos);
        const std::string item =
            csv.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        if (!item.empty()) {
            try {
                out.push_back(std::stod(item));
            } catch (const std::exception&) {
                throw UsageError("bad rho value '" + item + "'");
            }
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

// Shared flag bundle for everything that can come from the declarative
// config file. Only explicitly passed flags override the file.
struct CommonOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::string> prompt_style;
    std::optional<std::string> custom_template;
    std::optional<std::string> backend;
    std::optional<int> ngram_order;
    std::optional<std::string> ngram_unit;
    std::optional<double> ngram_k;
    std::optional<std::string> ngram_corpus;
    std::optional<std::string> endpoint;
    std::optional<std::string> endpoint_path;
    std::optional<std::string> model;
    std::optional<std::string> auth_env;
    std::optional<std::size_t> max_inflight;
    std::optional<int> timeout_s;
    std::optional<int> retries;
    std::optional<double> rho;
    std::optional<std::string> rho_base;
    std::optional<double> ifd_cutoff;
    std::optional<std::string> cache_file;
};

void add_common_flags(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "pipeline config file (JSON)");
    cmd->add_option("--seed", opts.seed, "shuffle/permutation seed");
    cmd->add_option("--out-dir", opts.out_dir, "output directory");
    cmd->add_option("--prompt-style", opts.prompt_style, "registered prompt style name");
    cmd->add_option("--custom-template", opts.custom_template,
                    "prompt layout with {instruction} and {input} placeholders");
    cmd->add_option("--backend", opts.backend, "scoring backend: ngram | remote");
    cmd->add_option("--ngram-order", opts.ngram_order, "n-gram order (>= 1)");
    cmd->add_option("--ngram-unit", opts.ngram_unit, "n-gram unit: char | word");
    cmd->add_option("--ngram-k", opts.ngram_k, "add-k smoothing constant (> 0)");
    cmd->add_option("--ngram-corpus", opts.ngram_corpus,
                    "n-gram training corpus file, or 'self' to fit on the scored samples");
    cmd->add_option("--endpoint", opts.endpoint, "remote backend base URL");
    cmd->add_option("--endpoint-path", opts.endpoint_path, "remote completion path");
    cmd->add_option("--model", opts.model, "remote model name");
    cmd->add_option("--auth-env", opts.auth_env, "env var holding the bearer token");
    cmd->add_option("--max-inflight", opts.max_inflight, "remote in-flight request bound");
    cmd->add_option("--timeout", opts.timeout_s, "remote timeout (seconds)");
    cmd->add_option("--retries", opts.retries, "remote retry budget");
    cmd->add_option("--rho", opts.rho, "selection ratio in [0,1]");
    cmd->add_option("--rho-base", opts.rho_base, "rho base: post_discard | original_pos");
    cmd->add_option("--ifd-cutoff", opts.ifd_cutoff, "discard records with ifd >= cutoff");
    cmd->add_option("--cache", opts.cache_file, "score cache file");
}

PipelineConfig effective_config(const CommonOpts& opts) {
    PipelineConfig config;
    if (!opts.config_path.empty()) config = load_pipeline_config(opts.config_path);
    if (opts.seed) config.seed = *opts.seed;
    if (opts.out_dir) config.out_dir = *opts.out_dir;
    if (opts.prompt_style) config.prompt_style = *opts.prompt_style;
    if (opts.custom_template) config.custom_template = *opts.custom_template;
    if (opts.backend) config.backend_kind = backend_kind_from_string(*opts.backend);
    if (opts.ngram_order) config.ngram.order = *opts.ngram_order;
    if (opts.ngram_unit) config.ngram.unit = ngram_unit_from_string(*opts.ngram_unit);
    if (opts.ngram_k) config.ngram.smoothing_k = *opts.ngram_k;
    if (opts.ngram_corpus) config.ngram.corpus = *opts.ngram_corpus;
    if (opts.endpoint) config.remote.endpoint = *opts.endpoint;
    if (opts.endpoint_path) config.remote.path = *opts.endpoint_path;
    if (opts.model) config.remote.model = *opts.model;
    if (opts.auth_env) config.remote.auth_env = *opts.auth_env;
    if (opts.max_inflight) config.remote.max_inflight = *opts.max_inflight;
    if (opts.timeout_s) config.remote.timeout_s = *opts.timeout_s;
    if (opts.retries) config.remote.retries = *opts.retries;
    if (opts.rho) config.curation.rho = *opts.rho;
    if (opts.rho_base) config.curation.rho_base = rho_base_from_string(*opts.rho_base);
    if (opts.ifd_cutoff) config.curation.ifd_cutoff = *opts.ifd_cutoff;
    if (opts.cache_file) config.cache_file = *opts.cache_file;
    return config;
}

int cmd_ingest(const std::string& input, const std::string& format, const std::string& dataset,
               const std::string& split, const std::vector<std::string>& category_map_pairs,
               bool strict, const std::string& labels_path, const std::string& out_path,
               bool validate_only) {
    DatasetSpec spec;
    spec.name = dataset;
    spec.format = format == "gold-jsonl" ? "gold_jsonl" : format;
    spec.category_map = parse_category_map(category_map_pairs);
    spec.bio_mode = strict ? BioMode::strict : BioMode::lenient;

    std::vector<RawInstance> instances =
        ingest_dataset_file(spec, input, split_from_string(split));

    std::optional<LabelSet> labels;
    if (!labels_path.empty()) {
        labels = load_label_set(labels_path);
        if (labels->dataset != dataset) {
            throw DataError("label set is for dataset '" + labels->dataset + "', not '" +
                            dataset + "'");
        }
    }
    const ValidationReport report = validate_instances(instances, labels ? &*labels : nullptr);

    ordered_json summary;
    summary["instances"] = instances.size();
    summary["violations"] = report.total_violations();
    summary["empty_name"] = report.empty_name;
    summary["empty_category"] = report.empty_category;
    summary["unknown_category"] = report.unknown_category;
    summary["name_not_in_text"] = report.name_not_in_text;
    summary["duplicate_id"] = report.duplicate_id;
    std::cout << summary.dump(2) << "\n";

    if (validate_only) return report.ok() ? 0 : 2;
    if (!report.ok()) {
        std::cerr << "ingest: " << report.total_violations() << " invariant violations\n";
        return 2;
    }
    write_file(out_path, instances_to_jsonl(instances));
    return 0;
}

int cmd_instructify(const std::string& instances_path, const std::string& labels_path,
                    const std::string& out_path) {
    const LabelSet labels = load_label_set(labels_path);
    std::vector<RawInstance> instances = instances_from_jsonl(read_file(instances_path));
    std::vector<InstructionSample> samples = build_samples(instances, labels);
    write_file(out_path, samples_to_jsonl(samples));
    std::size_t positives = 0;
    for (const auto& s : samples) positives += s.is_positive ? 1 : 0;
    log::event("stage.instructify",
               {{"n", samples.size()}, {"positives", positives},
                {"negatives", samples.size() - positives}});
    return 0;
}

int cmd_score(const CommonOpts& opts, const std::string& samples_path, const std::string& out_path,
              const std::string& model_artifact, const std::string& save_model) {
    PipelineConfig config = effective_config(opts);
    std::vector<InstructionSample> samples = samples_from_jsonl(read_file(samples_path));
    auto [positives, negatives] = partition(samples);
    (void)negatives;

    std::unique_ptr<LmBackend> backend;
    if (!model_artifact.empty()) {
        backend = std::make_unique<NgramModel>(NgramModel::load_json(read_file(model_artifact)));
    } else {
        backend = make_backend(config, samples);
    }
    if (!save_model.empty()) {
        if (auto* ngram = dynamic_cast<const NgramModel*>(backend.get())) {
            write_file(save_model, ngram->save_json());
        } else {
            throw UsageError("--save-model only applies to the ngram backend");
        }
    }

    std::string cache_path = config.cache_file;
    if (opts.cache_file) cache_path = *opts.cache_file;
    ScoreCache cache(cache_path);

    const ScoreBatchResult batch =
        score_batch(positives, *backend, config.effective_style(), cache);
    write_file(out_path, records_to_jsonl(batch.records));
    cache.flush();

    for (const auto& f : batch.failures) {
        log::event("score.failure", {{"id", f.sample_id}, {"reason", f.reason}});
    }
    log::event("stage.score", {{"scored", batch.records.size()},
                               {"failed", batch.failures.size()},
                               {"backend_calls", batch.backend_calls},
                               {"cache_hits", batch.cache_hits}});
    return batch.failures.empty() ? 0 : 3;
}

int cmd_curate(const CommonOpts& opts, const std::string& samples_path,
               const std::string& scores_path, const std::string& stem) {
    PipelineConfig config = effective_config(opts);
    std::vector<InstructionSample> samples = samples_from_jsonl(read_file(samples_path));
    std::vector<IfdRecord> records = records_from_jsonl(read_file(scores_path));

    if (records.empty()) throw DataError("curate: empty score file");
    for (const auto& r : records) {
        if (r.backend.fingerprint != records.front().backend.fingerprint) {
            throw DataError("curate: score file mixes backend fingerprints");
        }
    }

    auto [positives, negatives] = partition(samples);
    SuperfilterResult sf = superfilter(records, positives, config.curation);
    const std::uint64_t shuffle_seed = config.seed ^ fnv1a64(stem);
    std::vector<InstructionSample> composed = compose(sf.kept, negatives, shuffle_seed);

    CurationManifest manifest;
    manifest.config = config.curation;
    manifest.backend = records.front().backend;
    manifest.counts = {positives.size(), negatives.size(), sf.kept.size(), composed.size()};
    manifest.quantiles = sf.quantiles;
    manifest.kept_positive_ids = std::move(sf.kept_ids);
    manifest.discarded_ge_cutoff_ids = std::move(sf.discarded_ge_cutoff_ids);
    manifest.below_rank_ids = std::move(sf.below_rank_ids);
    for (const auto& n : negatives) manifest.negative_ids.push_back(n.id);
    manifest.shuffle_seed = shuffle_seed;
    manifest.config_hash = config.config_hash();

    write_file(config.out_dir / ("curated_" + stem + ".jsonl"), samples_to_jsonl(composed));
    write_file(config.out_dir / ("curated_" + stem + "_manifest.json"),
               manifest_to_json(manifest));
    log::event("stage.curate", {{"stem", stem},
                                {"kept", manifest.counts.kept_positives},
                                {"train", manifest.counts.train}});
    return 0;
}

int cmd_export(const CommonOpts& opts, const std::string& curated_path,
               const std::string& manifest_path, const std::string& stem) {
    PipelineConfig config = effective_config(opts);
    std::vector<InstructionSample> samples = samples_from_jsonl(read_file(curated_path));

    CurationManifest manifest;
    if (!manifest_path.empty()) {
        manifest = manifest_from_json(read_file(manifest_path));
    } else {
        // Plain export of a samples file: counts derived from content.
        auto [positives, negatives] = partition(samples);
        manifest.config = config.curation;
        manifest.backend = BackendId{BackendKind::ngram, "unspecified", ""};
        manifest.counts = {positives.size(), negatives.size(), positives.size(), samples.size()};
        for (const auto& p : positives) manifest.kept_positive_ids.push_back(p.id);
        for (const auto& n : negatives) manifest.negative_ids.push_back(n.id);
        manifest.quantiles = IfdQuantiles{};
        manifest.shuffle_seed = config.seed;
        manifest.config_hash = config.config_hash();
    }
    export_sft(samples, manifest, config.out_dir, stem);
    return 0;
}

int cmd_evaluate(const CommonOpts& opts, const std::string& gold_path,
                 const std::string& predictions_path, const std::string& out_path,
                 const std::string& table_path) {
    PipelineConfig config = effective_config(opts);
    std::vector<RawInstance> gold = instances_from_jsonl(read_file(gold_path));
    std::vector<PredictionLine> predictions = predictions_from_jsonl(read_file(predictions_path));

    // Group gold by dataset tag; predictions attach by id.
    std::map<std::string, std::vector<RawInstance>> by_dataset;
    for (auto& g : gold) by_dataset[g.dataset].push_back(std::move(g));
    std::map<std::string, std::vector<PredictionLine>> preds_by_dataset;
    {
        std::map<std::string, std::string> id_to_dataset;
        for (const auto& [ds, instances] : by_dataset) {
            for (const auto& inst : instances) id_to_dataset[inst.id] = ds;
        }
        for (auto& p : predictions) {
            auto it = id_to_dataset.find(p.id);
            if (it == id_to_dataset.end()) {
                throw DataError("prediction id has no gold instance: " + p.id);
            }
            preds_by_dataset[it->second].push_back(std::move(p));
        }
    }

    std::vector<EvalReport> reports;
    for (const auto& [ds, instances] : by_dataset) {
        reports.push_back(evaluate_dataset(instances, preds_by_dataset[ds]));
    }
    const std::string report_json =
        reports_to_json(reports, opts.config_path.empty() ? "" : config.config_hash(), config.seed);
    write_file(out_path, report_json);
    const std::string table = render_report_table(reports);
    if (!table_path.empty()) write_file(table_path, table);
    std::cout << table;
    return 0;
}

int cmd_sweep(const CommonOpts& opts, const std::string& rhos_csv,
              const std::vector<std::string>& cells, const std::string& out_csv,
              const std::string& out_json) {
    if (!cells.empty()) {
        // Grid mode: aggregate existing eval reports into the F1-vs-rho grid.
        std::vector<SweepCell> grid;
        for (const auto& cell : cells) {
            const std::size_t eq = cell.find('=');
            if (eq == std::string::npos) {
                throw UsageError("bad --cell '" + cell + "', expected RHO=REPORT.json");
            }
            double rho = 0.0;
            try {
                rho = std::stod(cell.substr(0, eq));
            } catch (const std::exception&) {
                throw UsageError("bad rho in --cell '" + cell + "'");
            }
            for (const auto& report : reports_from_json(read_file(cell.substr(eq + 1)))) {
                grid.push_back(SweepCell{report.dataset, rho, report});
            }
        }
        PipelineConfig config = effective_config(opts);
        const std::string hash = opts.config_path.empty() ? "" : config.config_hash();
        write_file(out_csv.empty() ? "sweep_grid.csv" : out_csv, sweep_grid_csv(grid));
        write_file(out_json.empty() ? "sweep_grid.json" : out_json,
                   sweep_grid_json(grid, hash, config.seed));
        return 0;
    }
    if (rhos_csv.empty()) {
        throw UsageError("sweep: pass --rhos for a curation sweep or --cell for a grid");
    }
    PipelineConfig config = effective_config(opts);
    run_curation_sweep(config, parse_rho_list(rhos_csv));
    return 0;
}

int cmd_run_all(const CommonOpts& opts, bool demo, bool pooled) {
    PipelineConfig config = effective_config(opts);
    if (demo) config.demo.enabled = true;
    if (pooled) config.pooled = true;
    const RunAllResult result = run_all(config);
    std::cout << "run-all complete: " << result.datasets << " dataset(s), config "
              << result.config_hash << ", outputs in " << result.out_dir.string() << "\n";
    return result.score_failures == 0 ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"biosift: instruction-tuning data curation for generative NER"};
    app.set_version_flag("--version", std::string(biosift::kVersion));
    app.require_subcommand(1);
    bool quiet = false;
    app.add_flag("--quiet", quiet, "suppress structured log events");

    // ingest
    std::string in_input, in_format = "bio", in_dataset, in_split = "train", in_labels, in_out;
    std::vector<std::string> in_catmap;
    bool in_strict = false, in_validate_only = false;
    auto* ingest = app.add_subcommand("ingest", "parse a BIO/CoNLL or gold-JSONL corpus");
    ingest->add_option("--input", in_input, "corpus file")->required();
    ingest->add_option("--format", in_format, "bio | gold-jsonl");
    ingest->add_option("--dataset", in_dataset, "dataset name")->required();
    ingest->add_option("--split", in_split, "train | dev | test");
    ingest->add_option("--category-map", in_catmap, "TAG=CATEGORY (repeatable)");
    ingest->add_flag("--strict", in_strict, "raise on dangling I- tags instead of recovering");
    ingest->add_option("--labels", in_labels, "label set file for category validation");
    ingest->add_option("--out", in_out, "output instance JSONL");
    ingest->add_flag("--validate-only", in_validate_only, "report invariant violations and exit");

    // instructify
    std::string inst_instances, inst_labels, inst_out;
    auto* instructify = app.add_subcommand("instructify", "build instruction samples");
    instructify->add_option("--instances", inst_instances, "instance JSONL")->required();
    instructify->add_option("--labels", inst_labels, "label set file")->required();
    instructify->add_option("--out", inst_out, "output samples JSONL")->required();

    // score
    CommonOpts score_opts;
    std::string score_samples, score_out, score_model_artifact, score_save_model;
    auto* score = app.add_subcommand("score", "compute IFD records for positive samples");
    add_common_flags(score, score_opts);
    score->add_option("--samples", score_samples, "samples JSONL")->required();
    score->add_option("--out", score_out, "output score JSONL")->required();
    score->add_option("--ngram-model", score_model_artifact, "pre-fitted n-gram artifact");
    score->add_option("--save-model", score_save_model, "persist the fitted n-gram artifact");

    // curate
    CommonOpts curate_opts;
    std::string curate_samples, curate_scores, curate_stem = "dataset";
    auto* curate = app.add_subcommand("curate", "superfilter positives and compose the train set");
    add_common_flags(curate, curate_opts);
    curate->add_option("--samples", curate_samples, "samples JSONL")->required();
    curate->add_option("--scores", curate_scores, "score JSONL")->required();
    curate->add_option("--stem", curate_stem, "output name stem");

    // export
    CommonOpts export_opts;
    std::string export_curated, export_manifest, export_stem = "sft";
    auto* exp = app.add_subcommand("export", "write SFT JSONL + manifests");
    add_common_flags(exp, export_opts);
    exp->add_option("--curated", export_curated, "curated samples JSONL")->required();
    exp->add_option("--manifest", export_manifest, "curation manifest JSON");
    exp->add_option("--stem", export_stem, "output name stem");

    // evaluate
    CommonOpts eval_opts;
    std::string eval_gold, eval_predictions, eval_out, eval_table;
    auto* evaluate = app.add_subcommand("evaluate", "strict-match micro-F1 of generations");
    add_common_flags(evaluate, eval_opts);
    evaluate->add_option("--gold", eval_gold, "gold instance JSONL")->required();
    evaluate->add_option("--predictions", eval_predictions, "predictions JSONL")->required();
    evaluate->add_option("--out", eval_out, "report JSON path")->required();
    evaluate->add_option("--table", eval_table, "also write the text table here");

    // sweep
    CommonOpts sweep_opts;
    std::string sweep_rhos, sweep_csv, sweep_json;
    std::vector<std::string> sweep_cells;
    auto* sweep = app.add_subcommand("sweep", "rho sweep / F1-vs-rho grid");
    add_common_flags(sweep, sweep_opts);
    sweep->add_option("--rhos", sweep_rhos, "comma-separated rho values for a curation sweep");
    sweep->add_option("--cell", sweep_cells, "RHO=REPORT.json grid cell (repeatable)");
    sweep->add_option("--out-csv", sweep_csv, "grid CSV path");
    sweep->add_option("--out-json", sweep_json, "grid JSON path");

    // run-all
    CommonOpts runall_opts;
    bool runall_demo = false, runall_pooled = false;
    auto* runall = app.add_subcommand("run-all", "full pipeline: ingest through export");
    add_common_flags(runall, runall_opts);
    runall->add_flag("--demo", runall_demo, "run the weak-to-strong n-gram demonstration");
    runall->add_flag("--pooled", runall_pooled, "curate all datasets as one pool");

    try {
        app.parse(argc, argv);
        biosift::log::set_quiet(quiet);

        if (*ingest) {
            if (!in_validate_only && in_out.empty()) {
                throw biosift::UsageError("ingest: --out is required unless --validate-only");
            }
            return cmd_ingest(in_input, in_format, in_dataset, in_split, in_catmap, in_strict,
                              in_labels, in_out, in_validate_only);
        }
        if (*instructify) return cmd_instructify(inst_instances, inst_labels, inst_out);
        if (*score) {
            return cmd_score(score_opts, score_samples, score_out, score_model_artifact,
                             score_save_model);
        }
        if (*curate) return cmd_curate(curate_opts, curate_samples, curate_scores, curate_stem);
        if (*exp) return cmd_export(export_opts, export_curated, export_manifest, export_stem);
        if (*evaluate) {
            return cmd_evaluate(eval_opts, eval_gold, eval_predictions, eval_out, eval_table);
        }
        if (*sweep) return cmd_sweep(sweep_opts, sweep_rhos, sweep_cells, sweep_csv, sweep_json);
        if (*runall) return cmd_run_all(runall_opts, runall_demo, runall_pooled);
        return 1;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const biosift::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const biosift::BackendError& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return 3;
    } catch (const biosift::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
