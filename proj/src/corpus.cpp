// Copyright 2026 the biosift authors
// SPDX-License-Identifier: Apache-2.0
#include "biosift/corpus.hpp"

#include "biosift/logging.hpp"
#include "biosift/text.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace biosift {

using nlohmann::json;
using nlohmann::ordered_json;

std::string to_string(Split split) {
    switch (split) {
        case Split::train: return "train";
        case Split::dev: return "dev";
        case Split::test: return "test";
    }
    throw DataError("bad split value");
}

Split split_from_string(std::string_view s) {
    if (s == "train") return Split::train;
    if (s == "dev") return Split::dev;
    if (s == "test") return Split::test;
    throw DataError("unknown split: " + std::string(s));
}

void LabelSet::validate() const {
    if (dataset.empty()) throw DataError("label set: dataset name empty");
    if (categories.empty()) throw DataError("label set: categories empty");
    std::size_t count = 0;
    for (std::size_t pos = instruction_template.find("{}"); pos != std::string::npos;
         pos = instruction_template.find("{}", pos + 2)) {
        ++count;
    }
    if (count != 1) {
        throw TemplateMismatch("instruction template must contain exactly one {} placeholder, found " +
                               std::to_string(count));
    }
}

LabelSet load_label_set(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open label set file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("label set " + path + ": " + e.what());
    }
    LabelSet labels;
    try {
        labels.dataset = j.at("dataset").get<std::string>();
        for (const auto& c : j.at("categories")) labels.categories.insert(c.get<std::string>());
        labels.instruction_template = j.at("template").get<std::string>();
        labels.category_description = j.at("category_description").get<std::string>();
    } catch (const json::exception& e) {
        throw DataError("label set " + path + ": " + e.what());
    }
    labels.validate();
    return labels;
}

namespace {

std::string join_tokens(const std::vector<std::string>& tokens, std::size_t begin, std::size_t end) {
    std::string out;
    for (std::size_t i = begin; i < end; ++i) {
        if (i > begin) out += ' ';
        out += tokens[i];
    }
    return out;
}

std::string make_id(const std::string& dataset, Split split, std::size_t ordinal) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%06zu", ordinal);
    return dataset + "-" + to_string(split) + "-" + buf;
}

struct OpenSpan {
    std::string category;
    std::size_t begin = 0;
};

std::string_view strip_bom(std::string_view bytes) {
    if (bytes.size() >= 3 && bytes.substr(0, 3) == "\xef\xbb\xbf") bytes.remove_prefix(3);
    return bytes;
}

std::vector<std::string_view> split_lines(std::string_view bytes) {
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        std::size_t eol = bytes.find('\n', pos);
        std::string_view line = (eol == std::string_view::npos) ? bytes.substr(pos)
                                                                : bytes.substr(pos, eol - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        if (eol == std::string_view::npos) break;
        pos = eol + 1;
    }
    return lines;
}

}  // namespace

BioParseResult parse_bio(std::string_view file_bytes, const std::string& dataset, Split split,
                         const std::map<std::string, std::string>& category_map, BioMode mode) {
    BioParseResult result;

    std::vector<std::string> tokens;
    std::vector<Entity> gold;
    OpenSpan open;
    bool span_active = false;
    std::size_t ordinal = 0;

    auto map_category = [&](const std::string& suffix, std::size_t line_no) -> std::string {
        if (category_map.empty()) return suffix;
        auto it = category_map.find(suffix);
        if (it == category_map.end()) {
            throw UnknownTag(line_no, "tag category '" + suffix + "' not in category map");
        }
        return it->second;
    };

    auto close_span = [&]() {
        if (!span_active) return;
        gold.push_back(Entity{open.category, join_tokens(tokens, open.begin, tokens.size())});
        span_active = false;
    };

    auto flush_instance = [&]() {
        close_span();
        if (tokens.empty()) return;
        RawInstance inst;
        inst.id = make_id(dataset, split, ordinal++);
        inst.text = join_tokens(tokens, 0, tokens.size());
        inst.gold = std::move(gold);
        inst.dataset = dataset;
        inst.split = split;
        result.instances.push_back(std::move(inst));
        tokens.clear();
        gold = {};
    };

    std::size_t line_no = 0;
    for (std::string_view line : split_lines(strip_bom(file_bytes))) {
        ++line_no;
        if (text::trim(line).empty()) {
            flush_instance();
            continue;
        }
        auto fields = text::whitespace_words(line);
        if (fields.size() != 2) {
            throw MalformedLine(line_no, "expected 2 fields, got " + std::to_string(fields.size()));
        }
        const std::string token = text::normalize(fields[0]);
        const std::string& tag = fields[1];

        if (tag == "O") {
            close_span();
        } else if (tag.size() >= 3 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-') {
            const std::string category = map_category(tag.substr(2), line_no);
            const bool continues = tag[0] == 'I' && span_active && open.category == category;
            if (tag[0] == 'B' || !continues) {
                if (tag[0] == 'I') {
                    // Dangling inside tag: no open span of this category.
                    if (mode == BioMode::strict) {
                        throw DanglingInside(line_no, "I-" + tag.substr(2) + " without matching B tag");
                    }
                    result.warnings.push_back({line_no, "dangling I-" + tag.substr(2) + " treated as B"});
                    log::event("ingest.dangling_inside",
                               {{"dataset", dataset}, {"line", line_no}, {"tag", tag}});
                }
                close_span();
                open = OpenSpan{category, tokens.size()};
                span_active = true;
            }
        } else {
            throw UnknownTag(line_no, "unknown tag '" + tag + "'");
        }
        tokens.push_back(token);
    }
    flush_instance();
    return result;
}

namespace {

// Shared by gold-JSONL ingest and canonical-JSONL reload.
RawInstance instance_from_json(const json& j, const std::string& dataset, Split split,
                               std::size_t line_no) {
    RawInstance inst;
    try {
        inst.id = j.at("id").get<std::string>();
        inst.text = text::normalize(j.at("text").get<std::string>());
        for (const auto& e : j.at("entities")) {
            inst.gold.push_back(Entity{text::normalize(e.at("entity").get<std::string>()),
                                       text::normalize(e.at("name").get<std::string>())});
        }
    } catch (const json::exception& e) {
        throw MalformedLine(line_no, std::string("gold JSONL: ") + e.what());
    }
    inst.dataset = dataset;
    inst.split = split;
    return inst;
}

}  // namespace

std::vector<RawInstance> parse_gold_jsonl(std::string_view file_bytes, const std::string& dataset,
                                          Split split) {
    std::vector<RawInstance> out;
    if (file_bytes.size() >= 3 && file_bytes.substr(0, 3) == "\xef\xbb\xbf") {
        file_bytes.remove_prefix(3);
    }
    std::istringstream in{std::string(file_bytes)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (text::trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) throw MalformedLine(line_no, "invalid JSON");
        out.push_back(instance_from_json(j, dataset, split, line_no));
    }
    return out;
}

ValidationReport validate_instances(const std::vector<RawInstance>& instances,
                                    const LabelSet* labels) {
    ValidationReport report;
    report.n_instances = instances.size();
    std::unordered_set<std::string> seen_ids;

    for (const auto& inst : instances) {
        const std::string key = inst.dataset + "/" + to_string(inst.split) + "/" + inst.id;
        if (!seen_ids.insert(key).second) {
            ++report.duplicate_id;
            report.issues.push_back({inst.id, "duplicate_id", key});
        }
        for (const auto& entity : inst.gold) {
            if (entity.name.empty()) {
                ++report.empty_name;
                report.issues.push_back({inst.id, "empty_name", entity.category});
            }
            if (entity.category.empty()) {
                ++report.empty_category;
                report.issues.push_back({inst.id, "empty_category", entity.name});
            } else if (labels != nullptr && !labels->categories.contains(entity.category)) {
                ++report.unknown_category;
                report.issues.push_back({inst.id, "unknown_category", entity.category});
            }
            if (!entity.name.empty() && inst.text.find(entity.name) == std::string::npos) {
                ++report.name_not_in_text;
                report.issues.push_back({inst.id, "name_not_in_text", entity.name});
            }
        }
    }
    return report;
}

std::string instances_to_jsonl(const std::vector<RawInstance>& instances) {
    std::string out;
    for (const auto& inst : instances) {
        ordered_json j;
        j["id"] = inst.id;
        j["text"] = inst.text;
        ordered_json entities = ordered_json::array();
        for (const auto& e : inst.gold) {
            entities.push_back(ordered_json{{"entity", e.category}, {"name", e.name}});
        }
        j["entities"] = std::move(entities);
        j["dataset"] = inst.dataset;
        j["split"] = to_string(inst.split);
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::vector<RawInstance> instances_from_jsonl(std::string_view bytes) {
    std::vector<RawInstance> out;
    std::istringstream in{std::string(bytes)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (text::trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) throw MalformedLine(line_no, "invalid JSON");
        std::string dataset;
        Split split = Split::train;
        try {
            dataset = j.at("dataset").get<std::string>();
            split = split_from_string(j.at("split").get<std::string>());
        } catch (const json::exception& e) {
            throw MalformedLine(line_no, std::string("instance JSONL: ") + e.what());
        }
        out.push_back(instance_from_json(j, dataset, split, line_no));
    }
    return out;
}

}  // namespace biosift
