// Copyright 2026 the biosift authors
// SPDX-License-Identifier: Apache-2.0
#include "biosift/evaluation.hpp"

#include "biosift/errors.hpp"
#include "biosift/logging.hpp"
#include "biosift/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <unordered_map>

namespace biosift {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Span of a balanced JSON array starting at `begin` (raw[begin] == '['),
// honoring string literals and escapes. npos if unbalanced.
std::size_t balanced_array_end(std::string_view raw, std::size_t begin) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = begin; i < raw.size(); ++i) {
        const char c = raw[i];
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        switch (c) {
            case '"': in_string = true; break;
            case '[':
            case '{': ++depth; break;
            case ']':
            case '}':
                --depth;
                if (depth == 0) return c == ']' ? i : std::string_view::npos;
                if (depth < 0) return std::string_view::npos;
                break;
            default: break;
        }
    }
    return std::string_view::npos;
}

}  // namespace

ParsedGeneration parse_generation(std::string_view raw) {
    for (std::size_t pos = raw.find('['); pos != std::string_view::npos;
         pos = raw.find('[', pos + 1)) {
        const std::size_t end = balanced_array_end(raw, pos);
        if (end == std::string_view::npos) continue;
        const json j = json::parse(raw.substr(pos, end - pos + 1), nullptr, false);
        if (j.is_discarded() || !j.is_array()) continue;

        ParsedGeneration result;
        std::set<Entity> entities;
        for (const auto& item : j) {
            if (!item.is_object() || item.size() != 2 || !item.contains("entity") ||
                !item.contains("name") || !item["entity"].is_string() ||
                !item["name"].is_string()) {
                ++result.dropped;
                continue;
            }
            Entity e{text::normalize(item["entity"].get<std::string>()),
                     text::normalize(item["name"].get<std::string>())};
            if (e.category.empty() || e.name.empty()) {
                ++result.dropped;
                continue;
            }
            entities.insert(std::move(e));
        }
        result.entities = std::move(entities);
        return result;
    }
    return ParsedGeneration{};  // no valid array anywhere
}

MatchCounts strict_match(const std::set<Entity>& pred, const std::set<Entity>& gold) {
    MatchCounts counts;
    for (const auto& e : pred) {
        if (gold.contains(e)) {
            ++counts.tp;
        } else {
            ++counts.fp;
        }
    }
    for (const auto& e : gold) {
        if (!pred.contains(e)) ++counts.fn;
    }
    return counts;
}

EvalReport micro_aggregate(const std::string& dataset, const std::vector<MatchCounts>& per_instance,
                           std::uint64_t parse_failures) {
    EvalReport report;
    report.dataset = dataset;
    report.n_instances = per_instance.size();
    report.parse_failures = parse_failures;
    for (const auto& c : per_instance) {
        report.tp += c.tp;
        report.fp += c.fp;
        report.fn += c.fn;
    }
    const double tp = static_cast<double>(report.tp);
    report.precision = (report.tp + report.fp) == 0 ? 0.0 : tp / static_cast<double>(report.tp + report.fp);
    report.recall = (report.tp + report.fn) == 0 ? 0.0 : tp / static_cast<double>(report.tp + report.fn);
    const double pr = report.precision + report.recall;
    report.micro_f1 = pr == 0.0 ? 0.0 : 2.0 * report.precision * report.recall / pr;
    return report;
}

std::vector<PredictionLine> predictions_from_jsonl(std::string_view bytes) {
    std::vector<PredictionLine> out;
    std::istringstream in{std::string(bytes)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (text::trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) throw MalformedLine(line_no, "invalid JSON");
        try {
            out.push_back(PredictionLine{j.at("id").get<std::string>(),
                                         j.at("generation").get<std::string>()});
        } catch (const json::exception& e) {
            throw MalformedLine(line_no, std::string("predictions JSONL: ") + e.what());
        }
    }
    return out;
}

std::set<Entity> gold_entity_set(const RawInstance& instance) {
    std::set<Entity> out;
    for (const auto& e : instance.gold) out.insert(e);
    return out;
}

EvalReport evaluate_dataset(const std::vector<RawInstance>& gold,
                            const std::vector<PredictionLine>& predictions) {
    if (gold.empty()) throw DataError("evaluate_dataset: no gold instances");
    const std::string dataset = gold.front().dataset;

    std::unordered_map<std::string, const PredictionLine*> by_id;
    for (const auto& p : predictions) {
        if (!by_id.emplace(p.id, &p).second) {
            throw DataError("duplicate prediction id: " + p.id);
        }
    }
    std::unordered_map<std::string, bool> gold_ids;
    for (const auto& g : gold) gold_ids[g.id] = true;
    for (const auto& p : predictions) {
        if (!gold_ids.contains(p.id)) {
            throw DataError("prediction id has no gold instance: " + p.id);
        }
    }

    std::vector<MatchCounts> per_instance;
    per_instance.reserve(gold.size());
    std::uint64_t parse_failures = 0;
    for (const auto& inst : gold) {
        if (inst.dataset != dataset) {
            throw DataError("evaluate_dataset: mixed datasets in gold input");
        }
        std::set<Entity> pred;
        auto it = by_id.find(inst.id);
        if (it == by_id.end()) {
            ++parse_failures;
            log::event("eval.missing_prediction", {{"id", inst.id}});
        } else {
            ParsedGeneration parsed = parse_generation(it->second->generation);
            if (parsed.failed()) {
                ++parse_failures;
                log::event("eval.parse_failure", {{"id", inst.id}});
            } else {
                pred = std::move(*parsed.entities);
                if (parsed.dropped > 0) {
                    log::event("eval.dropped_elements",
                               {{"id", inst.id}, {"count", parsed.dropped}});
                }
            }
        }
        per_instance.push_back(strict_match(pred, gold_entity_set(inst)));
    }
    return micro_aggregate(dataset, per_instance, parse_failures);
}

namespace {

ordered_json report_to_json_obj(const EvalReport& r) {
    ordered_json j;
    j["dataset"] = r.dataset;
    j["tp"] = r.tp;
    j["fp"] = r.fp;
    j["fn"] = r.fn;
    j["precision"] = r.precision;
    j["recall"] = r.recall;
    j["micro_f1"] = r.micro_f1;
    j["parse_failures"] = r.parse_failures;
    j["n_instances"] = r.n_instances;
    return j;
}

EvalReport report_from_json_obj(const json& j) {
    EvalReport r;
    r.dataset = j.at("dataset").get<std::string>();
    r.tp = j.at("tp").get<std::uint64_t>();
    r.fp = j.at("fp").get<std::uint64_t>();
    r.fn = j.at("fn").get<std::uint64_t>();
    r.precision = j.at("precision").get<double>();
    r.recall = j.at("recall").get<double>();
    r.micro_f1 = j.at("micro_f1").get<double>();
    r.parse_failures = j.at("parse_failures").get<std::uint64_t>();
    r.n_instances = j.at("n_instances").get<std::uint64_t>();
    return r;
}

}  // namespace

std::string reports_to_json(const std::vector<EvalReport>& reports, const std::string& config_hash,
                            std::uint64_t seed) {
    ordered_json j;
    j["format"] = "biosift.eval_report";
    j["version"] = 1;
    ordered_json arr = ordered_json::array();
    for (const auto& r : reports) arr.push_back(report_to_json_obj(r));
    j["reports"] = std::move(arr);
    j["config_hash"] = config_hash;
    j["seed"] = seed;
    return j.dump(2) + "\n";
}

std::vector<EvalReport> reports_from_json(std::string_view bytes) {
    json j = json::parse(bytes, nullptr, false);
    if (j.is_discarded()) throw DataError("eval report: invalid JSON");
    std::vector<EvalReport> out;
    try {
        for (const auto& r : j.at("reports")) out.push_back(report_from_json_obj(r));
    } catch (const json::exception& e) {
        throw DataError(std::string("eval report: ") + e.what());
    }
    return out;
}

namespace {

// Two-decimal fixed point via integer math; locale-independent.
std::string format_fixed2(double value) {
    const long long cents = std::llround(value * 100.0);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%lld.%02lld", cents / 100, cents % 100);
    return buf;
}

}  // namespace

std::string format_percent(double fraction) {
    return format_fixed2(fraction * 100.0);
}

std::string render_report_table(const std::vector<EvalReport>& reports) {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof(line), "%-20s %10s %10s %10s %11s %8s\n", "Dataset", "Precision",
                  "Recall", "Micro-F1", "ParseFails", "N");
    out << line;
    out << std::string(73, '-') << '\n';
    for (const auto& r : reports) {
        std::snprintf(line, sizeof(line), "%-20s %10s %10s %10s %11llu %8llu\n", r.dataset.c_str(),
                      format_percent(r.precision).c_str(), format_percent(r.recall).c_str(),
                      format_percent(r.micro_f1).c_str(),
                      static_cast<unsigned long long>(r.parse_failures),
                      static_cast<unsigned long long>(r.n_instances));
        out << line;
    }
    return out.str();
}

std::string sweep_grid_csv(const std::vector<SweepCell>& cells) {
    if (cells.empty()) throw DataError("sweep grid: no cells");
    std::set<std::string> datasets;
    std::set<double> rhos;
    std::map<std::pair<std::string, double>, const SweepCell*> by_key;
    for (const auto& c : cells) {
        datasets.insert(c.dataset);
        rhos.insert(c.rho);
        if (!by_key.emplace(std::make_pair(c.dataset, c.rho), &c).second) {
            throw DataError("sweep grid: duplicate cell for (" + c.dataset + ", rho)");
        }
    }
    std::ostringstream out;
    out << "rho";
    for (const auto& d : datasets) out << ',' << d;
    out << '\n';
    for (double rho : rhos) {
        out << format_fixed2(rho);
        for (const auto& d : datasets) {
            out << ',';
            auto it = by_key.find(std::make_pair(d, rho));
            if (it != by_key.end()) out << format_percent(it->second->report.micro_f1);
        }
        out << '\n';
    }
    return out.str();
}

std::string sweep_grid_json(const std::vector<SweepCell>& cells, const std::string& config_hash,
                            std::uint64_t seed) {
    ordered_json j;
    j["format"] = "biosift.sweep_grid";
    j["version"] = 1;
    std::vector<const SweepCell*> sorted;
    sorted.reserve(cells.size());
    for (const auto& c : cells) sorted.push_back(&c);
    std::sort(sorted.begin(), sorted.end(), [](const SweepCell* a, const SweepCell* b) {
        if (a->dataset != b->dataset) return a->dataset < b->dataset;
        return a->rho < b->rho;
    });
    ordered_json arr = ordered_json::array();
    for (const auto* c : sorted) {
        ordered_json cell;
        cell["dataset"] = c->dataset;
        cell["rho"] = c->rho;
        cell["report"] = report_to_json_obj(c->report);
        arr.push_back(std::move(cell));
    }
    j["cells"] = std::move(arr);
    j["config_hash"] = config_hash;
    j["seed"] = seed;
    return j.dump(2) + "\n";
}

}  // namespace biosift
