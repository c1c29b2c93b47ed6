// Copyright 2026 the biosift authors
// SPDX-License-Identifier: Apache-2.0
#include "biosift/instructify.hpp"

#include "biosift/errors.hpp"
#include "biosift/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <utility>

namespace biosift {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void append_json_escaped(std::string& out, std::string_view s) {
    for (char ch : s) {
        const unsigned char c = static_cast<unsigned char>(ch);
        switch (c) {
            case 0x08: out += "\\b"; break;
            case 0x09: out += "\\t"; break;
            case 0x0a: out += "\\n"; break;
            case 0x0c: out += "\\f"; break;
            case 0x0d: out += "\\r"; break;
            case 0x22: out += "\\\""; break;
            case 0x5c: out += "\\\\"; break;
            default:
                if (c < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += ch;
                }
        }
    }
}

}  // namespace

std::string serialize_entities(const std::vector<Entity>& entities) {
    std::string out = "[";
    bool first = true;
    for (const auto& e : entities) {
        if (e.name.empty()) throw DataError("entity name empty in serialize_entities");
        if (e.category.empty()) throw DataError("entity category empty in serialize_entities");
        if (!first) out += ',';
        first = false;
        out += "{\"entity\":\"";
        append_json_escaped(out, e.category);
        out += "\",\"name\":\"";
        append_json_escaped(out, e.name);
        out += "\"}";
    }
    out += ']';
    return out;
}

std::vector<Entity> parse_entities(std::string_view target) {
    json j = json::parse(target, nullptr, false);
    if (j.is_discarded() || !j.is_array()) throw DataError("target is not a JSON array");
    std::vector<Entity> out;
    for (const auto& item : j) {
        if (!item.is_object() || item.size() != 2 || !item.contains("entity") ||
            !item.contains("name") || !item["entity"].is_string() || !item["name"].is_string()) {
            throw DataError("target element must have exactly string keys \"entity\" and \"name\"");
        }
        out.push_back(Entity{item["entity"].get<std::string>(), item["name"].get<std::string>()});
    }
    return out;
}

namespace {

// Unique (category, name) pairs ordered by first occurrence in the text.
std::vector<Entity> dedup_and_order(const RawInstance& instance) {
    std::vector<std::pair<std::size_t, Entity>> keyed;
    std::set<Entity> seen;
    for (const auto& e : instance.gold) {
        if (!seen.insert(e).second) continue;
        keyed.emplace_back(instance.text.find(e.name), e);
    }
    std::stable_sort(keyed.begin(), keyed.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<Entity> out;
    out.reserve(keyed.size());
    for (auto& [pos, e] : keyed) out.push_back(std::move(e));
    return out;
}

}  // namespace

InstructionSample build_sample(const RawInstance& instance, const LabelSet& labels) {
    if (instance.dataset != labels.dataset) {
        throw DataError("instance dataset '" + instance.dataset + "' does not match label set '" +
                        labels.dataset + "'");
    }
    labels.validate();  // TemplateMismatch on bad placeholder count

    InstructionSample sample;
    sample.id = instance.id;
    const std::size_t pos = labels.instruction_template.find("{}");
    sample.instruction = labels.instruction_template;
    sample.instruction.replace(pos, 2, labels.category_description);
    sample.input_text = instance.text;
    sample.target = serialize_entities(dedup_and_order(instance));
    sample.is_positive = sample.target != "[]";
    sample.dataset = instance.dataset;
    sample.split = instance.split;
    return sample;
}

std::vector<InstructionSample> build_samples(const std::vector<RawInstance>& instances,
                                             const LabelSet& labels) {
    std::vector<InstructionSample> out;
    out.reserve(instances.size());
    for (const auto& inst : instances) out.push_back(build_sample(inst, labels));
    return out;
}

namespace {

std::map<std::string, std::string>& style_registry() {
    static std::map<std::string, std::string> styles = {
        {"default", "{instruction}\n\nText: {input}\n\nEntities:"},
        {"minimal", "{instruction}\n{input}"},
    };
    return styles;
}

std::mutex& style_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

void register_prompt_style(const std::string& name, const std::string& layout) {
    if (layout.find("{instruction}") == std::string::npos ||
        layout.find("{input}") == std::string::npos) {
        throw DataError("prompt style '" + name +
                        "' must contain {instruction} and {input} placeholders");
    }
    std::lock_guard<std::mutex> lock(style_mutex());
    style_registry()[name] = layout;
}

bool prompt_style_exists(const std::string& name) {
    std::lock_guard<std::mutex> lock(style_mutex());
    return style_registry().contains(name);
}

std::string render_prompt(const InstructionSample& sample, const std::string& style) {
    std::string layout;
    {
        std::lock_guard<std::mutex> lock(style_mutex());
        auto it = style_registry().find(style);
        if (it == style_registry().end()) throw UnknownStyle("unknown prompt style: " + style);
        layout = it->second;
    }
    std::string out = layout;
    out.replace(out.find("{instruction}"), 13, sample.instruction);
    out.replace(out.find("{input}"), 7, sample.input_text);
    return out;
}

std::string samples_to_jsonl(const std::vector<InstructionSample>& samples) {
    std::string out;
    for (const auto& s : samples) {
        ordered_json j;
        j["id"] = s.id;
        j["dataset"] = s.dataset;
        j["split"] = to_string(s.split);
        j["instruction"] = s.instruction;
        j["input"] = s.input_text;
        j["output"] = s.target;
        j["is_positive"] = s.is_positive;
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::vector<InstructionSample> samples_from_jsonl(std::string_view bytes) {
    std::vector<InstructionSample> out;
    std::istringstream in{std::string(bytes)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (text::trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) throw MalformedLine(line_no, "invalid JSON");
        InstructionSample s;
        try {
            s.id = j.at("id").get<std::string>();
            s.dataset = j.at("dataset").get<std::string>();
            s.split = split_from_string(j.at("split").get<std::string>());
            s.instruction = j.at("instruction").get<std::string>();
            s.input_text = j.at("input").get<std::string>();
            s.target = j.at("output").get<std::string>();
            s.is_positive = j.at("is_positive").get<bool>();
        } catch (const json::exception& e) {
            throw MalformedLine(line_no, std::string("samples JSONL: ") + e.what());
        }
        if (s.is_positive != (s.target != "[]")) {
            throw MalformedLine(line_no, "is_positive flag inconsistent with target");
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::string samples_to_sft_jsonl(const std::vector<InstructionSample>& samples) {
    std::string out;
    for (const auto& s : samples) {
        ordered_json j;
        j["id"] = s.id;
        j["instruction"] = s.instruction;
        j["input"] = s.input_text;
        j["output"] = s.target;
        out += j.dump();
        out += '\n';
    }
    return out;
}

}  // namespace biosift
