#include <doctest.h>

#include <random>

#include "tidybot/core/errors.hpp"
#include "tidybot/promptkit/dsl.hpp"

using namespace tidybot;
using namespace tidybot::dsl;

namespace {

std::string random_name(std::mt19937_64& rng) {
    static const std::string alphabet = "abcdefghijklmnopqrstuvwxyzABCXYZ0123456789 -_.,()'&/";
    std::string s;
    const auto len = 1 + rng() % 20;
    while (s.size() < len) s += alphabet[rng() % alphabet.size()];
    while (!s.empty() && s.front() == ' ') s.erase(s.begin());
    while (!s.empty() && s.back() == ' ') s.pop_back();
    return s.empty() ? "x" : s;
}

} // namespace

TEST_SUITE("dsl") {
    TEST_CASE("statements are classified") {
        CHECK(std::holds_alternative<PickAndPlace2>(parse_line(R"(pick_and_place("a", "b"))", 1)));
        CHECK(std::holds_alternative<PickAndPlace1>(parse_line(R"(pick_and_place("a"))", 1)));
        CHECK(std::holds_alternative<PickAndToss1>(parse_line(R"(pick_and_toss("a"))", 1)));
        CHECK(std::holds_alternative<ObjectsList>(parse_line(R"(objects = ["a", "b"])", 1)));
        CHECK(std::holds_alternative<ReceptaclesList>(parse_line(R"(receptacles = ["a"])", 1)));
        CHECK(std::holds_alternative<SummaryComment>(parse_line("# Summary: hello", 1)));
        CHECK(std::holds_alternative<UnknownCall>(parse_line(R"(pick_and_drop("a"))", 1)));
        CHECK(std::holds_alternative<UnknownCall>(parse_line(R"(pick_and_place("a", "b", "c"))", 1)));
        CHECK(std::holds_alternative<Other>(parse_line("", 1)));
        CHECK(std::holds_alternative<Other>(parse_line("Those are all the objects.", 1)));
    }

    TEST_CASE("whitespace around tokens is tolerated") {
        auto st = parse_line(R"(  pick_and_place ( "white shirt" ,"drawer" )  )", 1);
        REQUIRE(std::holds_alternative<PickAndPlace2>(st));
        CHECK(std::get<PickAndPlace2>(st).object == "white shirt");
        CHECK(std::get<PickAndPlace2>(st).receptacle == "drawer");
        auto list = parse_line(R"(objects = ["a", "b",])", 1);
        CHECK(std::get<ObjectsList>(list).names == std::vector<std::string>{"a", "b"});
    }

    TEST_CASE("malformed calls raise DslSyntaxError with the line number") {
        for (const char* bad : {R"(pick_and_place("a", "b")", R"(pick_and_place("a)", R"(pick_and_place(a, "b"))",
                                R"(pick_and_place("a" "b"))", R"(pick_and_place("a", "b") trailing)",
                                R"(objects = ["a")"}) {
            try {
                parse_line(bad, 7);
                FAIL("accepted " << bad);
            } catch (const DslSyntaxError& e) {
                CHECK(e.line() == 7);
            }
        }
    }

    TEST_CASE("split_lines drops carriage returns and keeps empty lines") {
        const auto lines = split_lines("a\r\n\nb");
        REQUIRE(lines.size() == 3);
        CHECK(lines[0] == "a");
        CHECK(lines[1].empty());
        CHECK(lines[2] == "b");
    }

    TEST_CASE("rendered statements re-parse to the same values") {
        std::mt19937_64 rng(42);
        for (int i = 0; i < 500; ++i) {
            const ObjectName o(random_name(rng));
            const ReceptacleName r(random_name(rng));
            auto st = parse_line(render_pick_and_place(o, r), 1);
            REQUIRE(std::holds_alternative<PickAndPlace2>(st));
            CHECK(std::get<PickAndPlace2>(st).object == o.str());
            CHECK(std::get<PickAndPlace2>(st).receptacle == r.str());

            const auto prim = rng() % 2 ? Primitive::Place : Primitive::Toss;
            auto ch = parse_line(render_choice({o, prim}), 1);
            if (prim == Primitive::Place)
                CHECK(std::get<PickAndPlace1>(ch).object == o.str());
            else
                CHECK(std::get<PickAndToss1>(ch).object == o.str());

            std::vector<std::string> names;
            for (std::size_t k = 0; k < rng() % 6; ++k) names.push_back(random_name(rng));
            auto list = parse_line(render_list("objects", names), 1);
            CHECK(std::get<ObjectsList>(list).names == names);
        }
    }

    TEST_CASE("render formats match the prompt style") {
        CHECK(render_pick_and_place(ObjectName("yellow shirt"), ReceptacleName("drawer")) ==
              R"(pick_and_place("yellow shirt", "drawer"))");
        CHECK(render_choice({ObjectName("white socks"), Primitive::Toss}) == R"(pick_and_toss("white socks"))");
        CHECK(render_list("receptacles", {"drawer", "closet"}) == R"(receptacles = ["drawer", "closet"])");
        CHECK(render_summary("Put it away.") == "# Summary: Put it away.");
    }
}
