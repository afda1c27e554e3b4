#include <doctest.h>

#include <random>

#include "generators.hpp"
#include "stub_server.hpp"
#include "support.hpp"
#include "tidybot/eval/harness.hpp"
#include "tidybot/eval/pipeline.hpp"

using namespace tidybot;
using namespace tidybot::eval;

namespace {

MethodContext fake_context(std::shared_ptr<llm::Backend> backend, MethodKind kind = MethodKind::Summarization) {
    MethodContext m;
    m.kind = kind;
    m.backend = std::move(backend);
    return m;
}

std::shared_ptr<test::FakeBackend> stub_model_backend() {
    return std::make_shared<test::FakeBackend>([](const PromptText& p) { return test::stub_model(p.text); });
}

std::string mangle_case(std::string s, std::mt19937_64& rng) {
    for (auto& c : s)
        if (rng() % 2) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return rng() % 2 ? "  " + s + " " : s;
}

std::vector<Prediction> random_predictions(const std::vector<Placement>& truth, const Scenario& sc,
                                           std::mt19937_64& rng) {
    std::vector<Prediction> out;
    for (const auto& p : truth) {
        const auto roll = rng() % 6;
        if (roll == 0) continue;
        std::string label;
        if (roll == 1)
            label = "no such receptacle";
        else if (roll == 2)
            label = sc.receptacles[rng() % sc.receptacles.size()].str();
        else
            label = mangle_case(p.receptacle.str(), rng);
        out.push_back({rng() % 4 == 0 ? mangle_case(p.object.str(), rng) : p.object.str(), label});
        if (rng() % 5 == 0) out.push_back({p.object.str(), sc.receptacles[0].str()});
    }
    if (rng() % 3 == 0) out.push_back({"ghost object", sc.receptacles[0].str()});
    std::shuffle(out.begin(), out.end(), rng);
    return out;
}

struct Expected {
    std::size_t correct = 0, incorrect = 0, unpredicted = 0, duplicates = 0, extraneous = 0, unknown = 0;
};

Expected oracle_score(const std::vector<Placement>& truth, const Scenario& sc, const std::vector<Prediction>& preds) {
    Expected e;
    std::map<std::string, std::string> want;
    for (const auto& p : truth) want[normalize_for_match(p.object.str())] = normalize_for_match(p.receptacle.str());
    std::set<std::string> known;
    for (const auto& r : sc.receptacles) known.insert(normalize_for_match(r.str()));
    std::map<std::string, std::string> first;
    for (const auto& p : preds) {
        const auto o = normalize_for_match(p.object);
        if (!want.count(o)) {
            ++e.extraneous;
            continue;
        }
        if (first.count(o)) {
            ++e.duplicates;
            continue;
        }
        first[o] = normalize_for_match(p.label);
        if (!known.count(first[o])) ++e.unknown;
    }
    for (const auto& [o, r] : want) {
        auto it = first.find(o);
        if (it == first.end())
            ++e.unpredicted;
        else if (it->second == r)
            ++e.correct;
        else
            ++e.incorrect;
    }
    return e;
}

std::size_t count(const ScenarioResult& r, Split s, AnomalyKind k) {
    return static_cast<std::size_t>(std::count_if(r.anomalies.begin(), r.anomalies.end(),
                                                  [&](const Anomaly& a) { return a.split == s && a.kind == k; }));
}

} // namespace

TEST_SUITE("eval") {
    TEST_CASE("method kinds round-trip their spellings") {
        for (auto k : {MethodKind::Summarization, MethodKind::ExamplesOnly, MethodKind::Commonsense,
                       MethodKind::Taxonomy, MethodKind::Embedding, MethodKind::HumanSummary})
            CHECK(parse_method_kind(to_string(k)) == k);
        CHECK(to_string(MethodKind::ExamplesOnly) == "examples-only");
        CHECK_FALSE(parse_method_kind("oracle").has_value());
        CHECK(uses_llm(MethodKind::HumanSummary));
        CHECK_FALSE(uses_llm(MethodKind::Taxonomy));
    }

    TEST_CASE("scoring matches an independent oracle and conserves predictions") {
        std::mt19937_64 rng(31337);
        for (int trial = 0; trial < 300; ++trial) {
            const auto sc = test::random_scenario(rng, "s", 2 + rng() % 4, false);
            const auto seen = random_predictions(sc.seen, sc, rng);
            const auto unseen = random_predictions(sc.unseen, sc, rng);
            const auto r = score_scenario(sc, seen, unseen);
            for (auto s : {Split::Seen, Split::Unseen}) {
                const auto& truth = s == Split::Seen ? sc.seen : sc.unseen;
                const auto& preds = s == Split::Seen ? seen : unseen;
                const auto& got = r.split(s);
                const auto want = oracle_score(truth, sc, preds);
                CHECK(got.total == truth.size());
                CHECK(got.correct == want.correct);
                CHECK(got.incorrect == want.incorrect);
                CHECK(got.unpredicted == want.unpredicted);
                CHECK(got.correct + got.incorrect + got.unpredicted == got.total);
                CHECK(got.accuracy >= 0.0);
                CHECK(got.accuracy <= 1.0);
                CHECK(got.accuracy == static_cast<double>(got.correct) / static_cast<double>(got.total));
                CHECK(count(r, s, AnomalyKind::DuplicatePrediction) == want.duplicates);
                CHECK(count(r, s, AnomalyKind::ExtraneousObject) == want.extraneous);
                CHECK(count(r, s, AnomalyKind::UnknownReceptacle) == want.unknown);
                CHECK(want.duplicates + want.extraneous + (got.correct + got.incorrect) == preds.size());
            }
        }
    }

    TEST_CASE("primitive scoring uses primitive spellings") {
        std::mt19937_64 rng(4);
        const auto sc = test::random_scenario(rng, "p", 2, true);
        auto seen = to_predictions(*sc.seen_primitives);
        auto unseen = to_predictions(*sc.unseen_primitives);
        unseen[0].label = unseen[0].label == "place" ? "toss" : "place";
        unseen[1].label = "drop";
        const auto r = score_primitive_scenario(sc, seen, unseen);
        CHECK(r.seen.correct == r.seen.total);
        CHECK(r.unseen.correct == r.unseen.total - 2);
        CHECK(count(r, Split::Unseen, AnomalyKind::UnknownReceptacle) == 1);
        auto bare = sc;
        bare.seen_primitives.reset();
        CHECK_THROWS_AS(score_primitive_scenario(bare, seen, unseen), MissingAnnotations);
    }

    TEST_CASE("summarization queries the summary, then unseen, then seen") {
        std::mt19937_64 rng(8);
        const auto sc = test::random_scenario(rng, "s", 3, false);
        auto fake = stub_model_backend();
        const auto out = run_summarization_method(sc, *fake, {});
        const auto sent = fake->prompts();
        REQUIRE(sent.size() == 3);
        CHECK(sent[0].kind == PromptKind::ReceptacleSummarization);
        CHECK(sent[1].text.ends_with(prompts::partial_call(sc.unseen[0].object)));
        CHECK(sent[2].text.ends_with(prompts::partial_call(sc.seen[0].object)));
        CHECK(out.summary.text() == "Put each object where the examples suggest.");
        CHECK(out.unseen.placements.size() == sc.unseen.size());
    }

    TEST_CASE("method failures become anomalies instead of aborting") {
        std::mt19937_64 rng(12);
        const auto sc = test::random_scenario(rng, "s", 2, false);
        SUBCASE("missing replay entry on the summary fails both splits") {
            auto fake = std::make_shared<test::FakeBackend>([](const PromptText&) -> std::string {
                throw MissingReplayEntry("none");
            });
            const auto r = evaluate_scenario(sc, fake_context(fake));
            CHECK(count(r, Split::Seen, AnomalyKind::MethodError) == 1);
            CHECK(count(r, Split::Unseen, AnomalyKind::MethodError) == 1);
            CHECK(r.seen.unpredicted == r.seen.total);
            CHECK_FALSE(r.summary.has_value());
        }
        SUBCASE("a bad selection only fails its own split") {
            auto fake = std::make_shared<test::FakeBackend>([&](const PromptText& p) -> std::string {
                if (p.kind == PromptKind::ReceptacleSummarization) return " Rule.";
                if (p.text.ends_with(prompts::partial_call(sc.unseen[0].object))) return "garbage";
                return test::stub_model(p.text);
            });
            const auto r = evaluate_scenario(sc, fake_context(fake));
            CHECK(count(r, Split::Unseen, AnomalyKind::MethodError) == 1);
            CHECK(count(r, Split::Seen, AnomalyKind::MethodError) == 0);
            CHECK(r.seen.unpredicted == 0);
            CHECK(r.summary == "Rule.");
        }
    }

    TEST_CASE("human summaries replace the summarization call") {
        std::mt19937_64 rng(13);
        const auto sc = test::random_scenario(rng, "s", 2, false);
        auto fake = stub_model_backend();
        auto m = fake_context(fake, MethodKind::HumanSummary);
        m.human_summaries[sc.id] = "Sort by what the user said.";
        const auto r = evaluate_scenario(sc, m);
        CHECK(r.summary == "Sort by what the user said.");
        for (const auto& p : fake->prompts()) CHECK(p.kind == PromptKind::ReceptacleSelection);
        m.human_summaries.clear();
        const auto missing = evaluate_scenario(sc, m);
        CHECK(count(missing, Split::Seen, AnomalyKind::MethodError) == 1);
    }

    TEST_CASE("human summary file rejects duplicates") {
        test::TempDir dir;
        write_file_atomic(dir.path() / "h.tsv", "a\tRule A.\nb\tRule B.\n");
        CHECK(load_human_summaries(dir.path() / "h.tsv").size() == 2);
        write_file_atomic(dir.path() / "d.tsv", "a\tRule A.\na\tAgain.\n");
        CHECK_THROWS_AS(load_human_summaries(dir.path() / "d.tsv"), ParseError);
    }

    TEST_CASE("aggregate computes macro and per-criterion means") {
        std::mt19937_64 rng(21);
        const auto ds = test::random_dataset(rng, 12, false);
        std::vector<ScenarioResult> results;
        for (const auto& sc : ds.scenarios)
            results.push_back(score_scenario(sc, random_predictions(sc.seen, sc, rng),
                                             random_predictions(sc.unseen, sc, rng)));
        const auto rep = aggregate(Task::Receptacle, fake_context(stub_model_backend()), results);
        double seen = 0, unseen = 0;
        for (const auto& r : results) {
            seen += r.seen.accuracy;
            unseen += r.unseen.accuracy;
        }
        CHECK(rep.macro_acc_seen == doctest::Approx(seen / 12).epsilon(1e-12));
        CHECK(rep.macro_acc_unseen == doctest::Approx(unseen / 12).epsilon(1e-12));
        for (const auto& [c, stats] : rep.per_criterion) {
            double s = 0;
            std::size_t n = 0;
            for (const auto& r : results)
                if (r.criteria.count(c)) {
                    s += r.seen.accuracy;
                    ++n;
                }
            CHECK(stats.scenarios == n);
            CHECK(stats.macro_acc_seen == doctest::Approx(s / static_cast<double>(n)).epsilon(1e-12));
        }
        CHECK(std::is_sorted(rep.results.begin(), rep.results.end(),
                             [](const auto& a, const auto& b) { return a.scenario_id < b.scenario_id; }));
    }

    TEST_CASE("reports are identical for any worker count") {
        std::mt19937_64 rng(99);
        const auto ds = test::random_dataset(rng, 20, true);
        const auto m = fake_context(stub_model_backend());
        const auto base = run_benchmark(ds, m, 1);
        const auto prim = run_primitive_benchmark(ds, m, 1);
        for (std::size_t w : {2u, 3u, 8u, 32u}) {
            CHECK(run_benchmark(ds, m, w).to_json() == base.to_json());
            CHECK(run_benchmark(ds, m, w).to_csv() == base.to_csv());
            CHECK(run_primitive_benchmark(ds, m, w).to_json() == prim.to_json());
        }
        CHECK_THROWS_AS(run_benchmark(ds, m, 0), ConfigError);
    }

    TEST_CASE("report json and csv carry the documented fields") {
        std::mt19937_64 rng(5);
        const auto ds = test::random_dataset(rng, 3, false);
        const auto rep = run_benchmark(ds, fake_context(stub_model_backend()), 2);
        const auto j = nlohmann::json::parse(rep.to_json());
        for (const char* key : {"task", "method", "model_id", "backend_fingerprint", "seen_protocol", "scenario_count",
                                "anomaly_count", "macro_acc_seen", "macro_acc_unseen", "per_criterion", "scenarios"})
            CHECK(j.contains(key));
        CHECK(j["scenario_count"] == 3);
        CHECK(j["scenarios"][0]["seen"].contains("predictions"));
        const auto csv = rep.to_csv();
        CHECK(csv.starts_with("scenario_id,split,criteria,total,correct,incorrect,unpredicted,accuracy,anomalies\n"));
        CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
        CHECK(rep.to_text().find("macro accuracy") != std::string::npos);
    }

    TEST_CASE("primitive benchmark rejects unsupported methods and missing annotations") {
        std::mt19937_64 rng(6);
        const auto with = test::random_dataset(rng, 2, true);
        const auto without = test::random_dataset(rng, 2, false);
        CHECK_THROWS_AS(run_primitive_benchmark(without, fake_context(stub_model_backend()), 1), MissingAnnotations);
        CHECK_THROWS_AS(run_primitive_benchmark(with, fake_context(stub_model_backend(), MethodKind::Commonsense), 1),
                        ConfigError);
    }

    TEST_CASE("method specs validate their resources") {
        MethodSpec spec;
        CHECK_THROWS_AS(spec.validate(), ConfigError);
        spec.kind = MethodKind::Taxonomy;
        CHECK_THROWS_AS(spec.validate(), ConfigError);
        spec.resources.taxonomy = test::fixture("baselines/taxonomy.tsv");
        CHECK_NOTHROW(spec.validate());
        const auto ctx = prepare_method(spec);
        CHECK(ctx.taxonomy->node_count() == 30);
        spec.kind = MethodKind::Embedding;
        CHECK_THROWS_AS(spec.validate(), ConfigError);
    }

    TEST_CASE("category extraction attaches categories to the summary") {
        test::FakeBackend fake([](const PromptText&) { return std::string("light things\", \"dark things\"]"); });
        const auto s = pipeline::extract_categories(Summary("Rule."), fake, {});
        REQUIRE(s.categories().has_value());
        CHECK(*s.categories() == test::objs({"light things", "dark things"}));
    }
}
