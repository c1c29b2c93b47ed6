// Copyright 2026 the biosift authors
// SPDX-License-Identifier: Apache-2.0
#include "biosift/evaluation.hpp"

#include "biosift/errors.hpp"
#include "biosift/logging.hpp"
#include "testutil.hpp"

#include <doctest.h>

using namespace biosift;

namespace {

struct Quiet {
    Quiet() { log::set_quiet(true); }
} quiet_logs;

std::set<Entity> entity_set(std::initializer_list<Entity> items) {
    return std::set<Entity>(items);
}

}  // namespace

TEST_CASE("parse_generation reads a bare JSON array") {
    const auto parsed = parse_generation(R"([{"entity":"Disease","name":"flu"}])");
    REQUIRE_FALSE(parsed.failed());
    CHECK(*parsed.entities == entity_set({{"Disease", "flu"}}));
    CHECK(parsed.dropped == 0);
}

TEST_CASE("parse_generation sees through code fences and prose") {
    const auto parsed = parse_generation("Sure! Here are the entities: ```json\n[]\n```");
    REQUIRE_FALSE(parsed.failed());
    CHECK(parsed.entities->empty());

    const auto chatty = parse_generation(
        "The text mentions two things.\n```json\n[{\"entity\":\"Chemical\",\"name\":\"aspirin\"}]\n```\nHope that helps!");
    REQUIRE_FALSE(chatty.failed());
    CHECK(*chatty.entities == entity_set({{"Chemical", "aspirin"}}));
}

TEST_CASE("parse_generation returns a failure marker when no array exists") {
    CHECK(parse_generation("no entities found").failed());
    CHECK(parse_generation("").failed());
    CHECK(parse_generation("[unterminated").failed());
    CHECK(parse_generation("{\"entity\":\"X\",\"name\":\"y\"}").failed());  // object, not array
}

TEST_CASE("parse_generation takes the first syntactically valid array") {
    // "[see]" is bracket-balanced but not valid JSON; scanning continues
    const auto parsed =
        parse_generation("as noted [see] here: [{\"entity\":\"A\",\"name\":\"b\"}]");
    REQUIRE_FALSE(parsed.failed());
    CHECK(*parsed.entities == entity_set({{"A", "b"}}));

    // a valid array of non-conforming elements wins first and drops them
    const auto numbers = parse_generation("scores [1,2] then [{\"entity\":\"A\",\"name\":\"b\"}]");
    REQUIRE_FALSE(numbers.failed());
    CHECK(numbers.entities->empty());
    CHECK(numbers.dropped == 2);
}

TEST_CASE("parse_generation drops malformed elements with a count") {
    const auto parsed = parse_generation(R"([
        {"entity":"Disease","name":"flu"},
        {"entity":"Disease"},
        {"entity":"Disease","name":42},
        {"entity":"Disease","name":"flu","extra":1},
        {"entity":"","name":"x"},
        {"entity":"Disease","name":"   "},
        "just a string",
        {"entity":"Disease","name":"flu"}
    ])");
    REQUIRE_FALSE(parsed.failed());
    CHECK(*parsed.entities == entity_set({{"Disease", "flu"}}));  // duplicate collapsed
    CHECK(parsed.dropped == 6);
}

TEST_CASE("parse_generation normalizes like the ingest side") {
    // decomposed e + combining acute in the generation, composed in gold
    const auto parsed = parse_generation("[{\"entity\":\"Disease\",\"name\":\" cafe\xcc\x81 \"}]");
    REQUIRE_FALSE(parsed.failed());
    CHECK(*parsed.entities == entity_set({{"Disease", "caf\xc3\xa9"}}));
}

TEST_CASE("parse_generation handles brackets inside strings") {
    const auto parsed = parse_generation(R"([{"entity":"Gene","name":"p53 [mutant]"}])");
    REQUIRE_FALSE(parsed.failed());
    CHECK(*parsed.entities == entity_set({{"Gene", "p53 [mutant]"}}));
}

TEST_CASE("strict_match on the identity case") {
    const auto gold = entity_set({{"Disease", "cancer"}});
    const auto counts = strict_match(gold, gold);
    CHECK(counts.tp == 1);
    CHECK(counts.fp == 0);
    CHECK(counts.fn == 0);
}

TEST_CASE("strict_match worked example yields balanced errors") {
    const auto gold = entity_set({{"Disease", "cancer"}, {"Disease", "flu"}});
    const auto pred = entity_set({{"Disease", "cancer"}, {"Chemical", "aspirin"}});
    const auto counts = strict_match(pred, gold);
    CHECK(counts.tp == 1);
    CHECK(counts.fp == 1);
    CHECK(counts.fn == 1);
    const auto report = micro_aggregate("ds", {counts});
    CHECK(report.precision == 0.5);
    CHECK(report.recall == 0.5);
    CHECK(report.micro_f1 == 0.5);
}

TEST_CASE("strict_match is case-sensitive and category-sensitive") {
    const auto gold = entity_set({{"Disease", "Cancer"}});
    CHECK(strict_match(entity_set({{"Disease", "cancer"}}), gold).tp == 0);
    CHECK(strict_match(entity_set({{"Chemical", "Cancer"}}), gold).tp == 0);
}

TEST_CASE("empty prediction and gold contribute nothing") {
    const auto counts = strict_match({}, {});
    CHECK(counts.tp == 0);
    CHECK(counts.fp == 0);
    CHECK(counts.fn == 0);
}

TEST_CASE("swapping prediction and gold swaps fp and fn") {
    SplitMix64 rng(21);
    for (int trial = 0; trial < 100; ++trial) {
        std::set<Entity> a, b;
        for (int i = 0; i < 5; ++i) {
            a.insert(Entity{"C" + std::to_string(rng.next_below(3)),
                            "n" + std::to_string(rng.next_below(6))});
            b.insert(Entity{"C" + std::to_string(rng.next_below(3)),
                            "n" + std::to_string(rng.next_below(6))});
        }
        const auto ab = strict_match(a, b);
        const auto ba = strict_match(b, a);
        CHECK(ab.tp == ba.tp);
        CHECK(ab.fp == ba.fn);
        CHECK(ab.fn == ba.fp);
    }
}

TEST_CASE("micro_aggregate sums counts before the ratios") {
    const auto report = micro_aggregate("ds", {{1, 0, 0}, {1, 1, 1}});
    CHECK(report.tp == 2);
    CHECK(report.fp == 1);
    CHECK(report.fn == 1);
    CHECK(report.precision == doctest::Approx(2.0 / 3.0));
    CHECK(report.recall == doctest::Approx(2.0 / 3.0));
    CHECK(report.micro_f1 == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("micro_aggregate zero-denominator rules") {
    const auto perfect = micro_aggregate("ds", {{3, 0, 0}});
    CHECK(perfect.precision == 1.0);
    CHECK(perfect.recall == 1.0);
    CHECK(perfect.micro_f1 == 1.0);

    const auto nothing = micro_aggregate("ds", {{0, 0, 5}});
    CHECK(nothing.precision == 0.0);
    CHECK(nothing.recall == 0.0);
    CHECK(nothing.micro_f1 == 0.0);

    const auto empty = micro_aggregate("ds", {});
    CHECK(empty.micro_f1 == 0.0);
}

TEST_CASE("micro-F1 equals one exactly when nothing is mismatched") {
    SplitMix64 rng(33);
    for (int trial = 0; trial < 200; ++trial) {
        const MatchCounts c{rng.next_below(5), rng.next_below(3), rng.next_below(3)};
        const auto report = micro_aggregate("ds", {c});
        CHECK(report.micro_f1 >= 0.0);
        CHECK(report.micro_f1 <= 1.0);
        const bool is_one = report.micro_f1 == 1.0;
        const bool should_be_one = c.fp == 0 && c.fn == 0 && c.tp >= 1;
        CHECK(is_one == should_be_one);
    }
}

TEST_CASE("micro metrics equal the brute-force oracle on random instance sets") {
    SplitMix64 rng(2718);
    for (int trial = 0; trial < 60; ++trial) {
        std::vector<std::pair<std::vector<Entity>, std::vector<Entity>>> pairs;
        std::vector<MatchCounts> counts;
        const std::size_t n_instances = 1 + rng.next_below(50);
        for (std::size_t i = 0; i < n_instances; ++i) {
            std::set<Entity> pred, gold;
            const std::size_t np = rng.next_below(6);
            const std::size_t ng = rng.next_below(6);
            for (std::size_t k = 0; k < np; ++k) {
                pred.insert(Entity{"C" + std::to_string(rng.next_below(3)),
                                   "n" + std::to_string(rng.next_below(8))});
            }
            for (std::size_t k = 0; k < ng; ++k) {
                gold.insert(Entity{"C" + std::to_string(rng.next_below(3)),
                                   "n" + std::to_string(rng.next_below(8))});
            }
            counts.push_back(strict_match(pred, gold));
            pairs.emplace_back(std::vector<Entity>(pred.begin(), pred.end()),
                               std::vector<Entity>(gold.begin(), gold.end()));
        }
        const auto report = micro_aggregate("ds", counts);
        const auto oracle = testutil::oracle_micro(pairs);
        CHECK(report.tp == oracle.tp);
        CHECK(report.fp == oracle.fp);
        CHECK(report.fn == oracle.fn);
        CHECK(report.precision == oracle.precision);
        CHECK(report.recall == oracle.recall);
        CHECK(report.micro_f1 == oracle.f1);
    }
}

TEST_CASE("evaluate_dataset tallies failures and conserves the instance count") {
    std::vector<RawInstance> gold;
    gold.push_back({"id-0", "aspirin treats pain", {Entity{"Chemical", "aspirin"}}, "ds",
                    Split::test});
    gold.push_back({"id-1", "no findings", {}, "ds", Split::test});
    gold.push_back({"id-2", "gout flared", {Entity{"Disease", "gout"}}, "ds", Split::test});

    std::vector<PredictionLine> predictions{
        {"id-0", R"([{"entity":"Chemical","name":"aspirin"}])"},
        {"id-1", "I could not find anything."},  // parse failure, gold empty
        // id-2 missing entirely
    };
    const auto report = evaluate_dataset(gold, predictions);
    CHECK(report.dataset == "ds");
    CHECK(report.n_instances == 3);
    CHECK(report.parse_failures == 2);
    CHECK(report.tp == 1);
    CHECK(report.fp == 0);
    CHECK(report.fn == 1);  // gout missed via the missing prediction
    // parse failures score as empty predictions: recall suffers, precision does not
    CHECK(report.precision == 1.0);
    CHECK(report.recall == 0.5);
}

TEST_CASE("evaluate_dataset rejects duplicate and unknown prediction ids") {
    std::vector<RawInstance> gold{{"id-0", "text", {}, "ds", Split::test}};
    CHECK_THROWS_AS(
        evaluate_dataset(gold, {{"id-0", "[]"}, {"id-0", "[]"}}),
        DataError);
    CHECK_THROWS_AS(evaluate_dataset(gold, {{"ghost", "[]"}}), DataError);
}

TEST_CASE("predictions JSONL parses the pinned fields") {
    const auto lines = predictions_from_jsonl(
        "{\"id\":\"a\",\"generation\":\"[]\"}\n{\"id\":\"b\",\"generation\":\"x\"}\n");
    REQUIRE(lines.size() == 2);
    CHECK(lines[0].id == "a");
    CHECK(lines[1].generation == "x");
    CHECK_THROWS_AS(predictions_from_jsonl("{\"id\":\"a\"}\n"), MalformedLine);
}

TEST_CASE("percent formatting is fixed two-decimal") {
    CHECK(format_percent(0.8829) == "88.29");
    CHECK(format_percent(0.0) == "0.00");
    CHECK(format_percent(1.0) == "100.00");
    CHECK(format_percent(0.5) == "50.00");
    CHECK(format_percent(2.0 / 3.0) == "66.67");
}

TEST_CASE("report table carries the three metric columns") {
    EvalReport r;
    r.dataset = "toydis";
    r.tp = 1;
    r.fp = 1;
    r.fn = 1;
    r.precision = 0.5;
    r.recall = 0.5;
    r.micro_f1 = 0.5;
    r.parse_failures = 2;
    r.n_instances = 40;
    const std::string table = render_report_table({r});
    CHECK(table.find("Precision") != std::string::npos);
    CHECK(table.find("Recall") != std::string::npos);
    CHECK(table.find("Micro-F1") != std::string::npos);
    CHECK(table.find("toydis") != std::string::npos);
    CHECK(table.find("50.00") != std::string::npos);
}

TEST_CASE("sweep grid formats cells and leaves holes blank") {
    EvalReport ncbi;
    ncbi.dataset = "NCBI";
    ncbi.micro_f1 = 0.8829;
    EvalReport gm;
    gm.dataset = "BC2GM";
    gm.micro_f1 = 0.75;

    std::vector<SweepCell> cells{{
                                     "NCBI",
                                     0.5,
                                     ncbi,
                                 },
                                 {"NCBI", 0.25, ncbi},
                                 {"BC2GM", 0.25, gm}};
    const std::string csv = sweep_grid_csv(cells);
    CHECK(csv == "rho,BC2GM,NCBI\n0.25,75.00,88.29\n0.50,,88.29\n");
    CHECK(sweep_grid_csv(cells) == csv);

    const std::string json = sweep_grid_json(cells, "hash", 7);
    CHECK(json.find("\"dataset\": \"NCBI\"") != std::string::npos);
    CHECK(json.find("\"config_hash\": \"hash\"") != std::string::npos);

    CHECK_THROWS_AS(sweep_grid_csv({}), DataError);
}

TEST_CASE("eval reports round trip through JSON") {
    EvalReport r;
    r.dataset = "ds";
    r.tp = 5;
    r.fp = 2;
    r.fn = 1;
    r.precision = 5.0 / 7.0;
    r.recall = 5.0 / 6.0;
    r.micro_f1 = 2 * r.precision * r.recall / (r.precision + r.recall);
    r.parse_failures = 3;
    r.n_instances = 40;
    const std::string json = reports_to_json({r}, "confhash", 11);
    const auto reloaded = reports_from_json(json);
    REQUIRE(reloaded.size() == 1);
    CHECK(reloaded[0].dataset == "ds");
    CHECK(reloaded[0].tp == 5);
    CHECK(reloaded[0].precision == r.precision);
    CHECK(reloaded[0].micro_f1 == r.micro_f1);
    CHECK(reports_to_json(reloaded, "confhash", 11) == json);
}
