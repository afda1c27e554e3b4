#include <doctest.h>

#include "golden_prompts.hpp"
#include "support.hpp"
#include "tidybot/replay/script.hpp"

using namespace tidybot;

namespace {

Dataset reference_dataset() { return load_dataset(test::data("reference/scenarios.json")); }
std::vector<sim::World> reference_worlds() { return {sim::load_world(test::data("scenes/living_room_examples.json"))}; }

replay::ScriptEntry entry(std::string target, std::string step, std::string completion) {
    return {std::move(target), std::move(step), std::move(completion), std::nullopt};
}

} // namespace

TEST_SUITE("replay") {
    TEST_CASE("committed replay stores match their scripts") {
        const auto ref = replay::compile_replay(replay::load_replay_script(test::data("reference/replay_script.json")),
                                                  reference_dataset(), reference_worlds(), {});
        CHECK(replay::render_jsonl(ref) == read_file(test::data("reference/replay.jsonl")));
        CHECK(ref.size() == 14);
        const auto bench = replay::compile_replay(replay::load_replay_script(test::fixture("bench6/replay_script.json")),
                                                  load_dataset(test::fixture("bench6/dataset.json")), {}, {});
        CHECK(replay::render_jsonl(bench) == read_file(test::fixture("bench6/replay.jsonl")));
    }

    TEST_CASE("golden prompts are reproduced by the compiler") {
        namespace gp = test::golden;
        replay::ReplayScript s;
        s.entries = {entry("living_room_scene", "receptacle_summary", gp::completion(1)),
                     entry("living_room_scene", "category_extraction", gp::completion(5)),
                     entry("living_room_scene", "primitive_summary", gp::completion(3)),
                     entry("living_room_scene", "receptacle_selection", gp::completion(6)),
                     entry("living_room_scene", "primitive_selection", gp::completion(7))};
        const auto recs = replay::compile_replay(s, reference_dataset(), reference_worlds(), {});
        REQUIRE(recs.size() == 5);
        CHECK(recs[0].prompt == gp::prompt(1));
        CHECK(recs[1].prompt == gp::prompt(5));
        CHECK(recs[2].prompt == gp::prompt(3));
        CHECK(recs[3].prompt == gp::prompt(6));
        CHECK(recs[4].prompt == gp::prompt(7));
        for (const auto& r : recs) CHECK(r.key == llm::cache_key(r.prompt, r.params));
    }

    TEST_CASE("scripts with unknown targets, steps or missing dependencies are rejected") {
        const auto ds = reference_dataset();
        const auto worlds = reference_worlds();
        auto compile = [&](std::vector<replay::ScriptEntry> e) {
            return replay::compile_replay(replay::ReplayScript{std::move(e)}, ds, worlds, {});
        };
        CHECK_THROWS_AS(compile({entry("nowhere", "receptacle_summary", " x")}), ConfigError);
        CHECK_THROWS_AS(compile({entry("s31_clothes_by_color", "receptacle_selection", " x")}), ConfigError);
        CHECK_THROWS_AS(compile({entry("living_room_scene", "seen_selection", " x")}), ConfigError);
        CHECK_THROWS_AS(compile({entry("s31_clothes_by_color", "unseen_selection", " x")}), ConfigError);
        CHECK_THROWS_AS(compile({entry("living_room_scene", "receptacle_summary", " x"),
                                 entry("living_room_scene", "receptacle_selection", " x")}),
                        ConfigError);
        CHECK_THROWS_AS(compile({entry("s31_clothes_by_color", "receptacle_summary", " a"),
                                 entry("s31_clothes_by_color", "receptacle_summary", " b")}),
                        ConfigError);
        CHECK_THROWS_AS(compile({entry("s31_clothes_by_color", "receptacle_summary", " a"),
                                 entry("s31_clothes_by_color", "receptacle_summary", " a")}),
                        ConfigError);
        CHECK(compile({entry("living_room_examples", "receptacle_summary", " a"),
                       entry("living_room_scene", "receptacle_summary", " a")})
                  .size() == 1);
        CHECK_THROWS_AS(compile({entry("living_room_examples", "receptacle_summary", " a"),
                                 entry("living_room_scene", "receptacle_summary", " b")}),
                        ConfigError);
    }

    TEST_CASE("an entry's own summary overrides the target's summary") {
        const auto ds = reference_dataset();
        auto e = entry("s31_clothes_by_color", "unseen_selection", " \"closet\")");
        e.summary = "Keep everything in the closet.";
        const auto recs = replay::compile_replay(replay::ReplayScript{{e}}, ds, {}, {});
        REQUIRE(recs.size() == 1);
        CHECK(recs[0].prompt.find("# Summary: Keep everything in the closet.") != std::string::npos);
    }

    TEST_CASE("script parsing reports malformed input") {
        CHECK_THROWS_AS(replay::parse_replay_script("[]"), ParseError);
        CHECK_THROWS_AS(replay::parse_replay_script(R"({"entries": [{"target": "a"}]})"), ParseError);
        CHECK_THROWS_AS(replay::parse_replay_script("{"), ParseError);
        const auto s = replay::parse_replay_script(
            R"({"entries": [{"target": "a", "step": "b", "completion": "c", "summary": "d"}]})");
        REQUIRE(s.entries.size() == 1);
        CHECK(s.entries[0].summary == "d");
    }
}
