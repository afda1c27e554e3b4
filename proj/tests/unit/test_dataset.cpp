#include <doctest.h>

#include <random>

#include "generators.hpp"
#include "support.hpp"
#include "tidybot/core/dataset.hpp"

using namespace tidybot;
using tidybot::test::random_dataset;

namespace {

std::vector<std::string> invariants(const ValidationReport& r) {
    std::vector<std::string> out;
    for (const auto& f : r.errors) out.push_back(f.invariant);
    return out;
}

bool only(const ValidationReport& r, std::string_view inv) {
    if (r.errors.empty()) return false;
    for (const auto& f : r.errors)
        if (f.invariant != inv) return false;
    return true;
}

} // namespace

TEST_SUITE("dataset") {
    TEST_CASE("committed datasets validate") {
        for (auto p : {test::data("reference/scenarios.json"), test::fixture("bench6/dataset.json")}) {
            const auto ds = load_dataset(p);
            CHECK(validate_dataset(ds).ok());
        }
    }

    TEST_CASE("serialize then parse is the identity on random datasets") {
        std::mt19937_64 rng(7);
        for (int trial = 0; trial < 50; ++trial) {
            const auto ds = random_dataset(rng, 1 + rng() % 6, trial % 2 == 0);
            const auto text = serialize_dataset(ds);
            CHECK(parse_dataset(text) == ds);
            CHECK(serialize_dataset(parse_dataset(text)) == text);
            CHECK(validate_dataset(ds).ok());
        }
    }

    TEST_CASE("stats count placements and criteria") {
        std::mt19937_64 rng(11);
        const auto ds = random_dataset(rng, 8, false);
        const auto rep = validate_dataset(ds);
        std::size_t seen = 0, unseen = 0;
        for (const auto& sc : ds.scenarios) {
            seen += sc.seen.size();
            unseen += sc.unseen.size();
        }
        CHECK(rep.stats.scenarios == 8);
        CHECK(rep.stats.seen_placements == seen);
        CHECK(rep.stats.unseen_placements == unseen);
        const auto tally = tally_criteria(ds);
        for (const auto& [c, n] : tally) {
            std::size_t expect = 0;
            for (const auto& sc : ds.scenarios) expect += sc.criteria.count(c);
            CHECK(n == expect);
        }
    }

    TEST_CASE("each broken invariant is reported by name") {
        std::mt19937_64 rng(3);
        auto base = random_dataset(rng, 1, true);
        auto& sc0 = base.scenarios[0];
        REQUIRE(validate_dataset(base).ok());

        SUBCASE("receptacle count") {
            auto ds = base;
            ds.scenarios[0].receptacles.emplace_back("spare");
            ds.scenarios[0].receptacles.emplace_back("spare 2");
            ds.scenarios[0].receptacles.emplace_back("spare 3");
            ds.scenarios[0].receptacles.emplace_back("spare 4");
            const auto inv = invariants(validate_dataset(ds));
            CHECK(std::find(inv.begin(), inv.end(), invariant::kReceptacleCount) != inv.end());
        }
        SUBCASE("split balance") {
            auto ds = base;
            ds.scenarios[0].unseen.pop_back();
            ds.scenarios[0].unseen_primitives->pop_back();
            const auto inv = invariants(validate_dataset(ds));
            CHECK(std::find(inv.begin(), inv.end(), invariant::kSplitBalance) != inv.end());
        }
        SUBCASE("unknown receptacle") {
            auto ds = base;
            ds.scenarios[0].unseen[0].receptacle = ReceptacleName("nowhere");
            const auto inv = invariants(validate_dataset(ds));
            CHECK(std::find(inv.begin(), inv.end(), invariant::kUnknownReceptacle) != inv.end());
        }
        SUBCASE("disjoint splits") {
            auto ds = base;
            auto& s = ds.scenarios[0];
            const auto moved = s.seen[0].object;
            auto it = std::find_if(s.unseen.begin(), s.unseen.end(),
                                   [&](const Placement& p) { return p.receptacle == s.seen[0].receptacle; });
            (*s.unseen_primitives)[it - s.unseen.begin()].object = moved;
            it->object = moved;
            CHECK(only(validate_dataset(ds), invariant::kDisjointSplits));
        }
        SUBCASE("missing criteria") {
            auto ds = base;
            ds.scenarios[0].criteria.clear();
            CHECK(only(validate_dataset(ds), invariant::kCriteriaPresent));
        }
        SUBCASE("duplicate scenario id") {
            auto ds = base;
            ds.scenarios.push_back(sc0);
            CHECK(only(validate_dataset(ds), invariant::kUniqueScenarioId));
        }
        SUBCASE("primitive coverage") {
            auto ds = base;
            ds.scenarios[0].unseen_primitives.reset();
            CHECK(only(validate_dataset(ds), invariant::kPrimitiveCoverage));
        }
    }

    TEST_CASE("parse errors name the field") {
        CHECK_THROWS_AS(parse_dataset("{"), ParseError);
        try {
            parse_dataset(R"({"scenarios":[{"id":"x","room_type":"attic","receptacles":[],"seen":[],"unseen":[],"criteria":[]}]})");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.field().find("room_type") != std::string::npos);
        }
    }

    TEST_CASE("load_dataset raises ValidationError for invariant violations") {
        test::TempDir dir;
        std::mt19937_64 rng(5);
        auto ds = random_dataset(rng, 1, false);
        ds.scenarios[0].criteria.clear();
        write_file_atomic(dir.path() / "bad.json", serialize_dataset(ds));
        CHECK_THROWS_AS(load_dataset(dir.path() / "bad.json"), ValidationError);
        CHECK_THROWS_AS(load_dataset(dir.path() / "missing.json"), ConfigError);
    }
}
