#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "tidybot/baselines/baselines.hpp"
#include "tidybot/core/dataset.hpp"
#include "tidybot/eval/harness.hpp"
#include "tidybot/llm/backend.hpp"
#include "tidybot/promptkit/prompts.hpp"
#include "tidybot/sim/episode.hpp"

namespace py = pybind11;
using namespace tidybot;

namespace {

using Pair = std::pair<std::string, std::string>;

std::vector<ObjectName> objects_of(const std::vector<std::string>& names) {
    return {names.begin(), names.end()};
}

std::vector<ReceptacleName> receptacles_of(const std::vector<std::string>& names) {
    return {names.begin(), names.end()};
}

Primitive primitive_of(const std::string& s) {
    auto p = parse_primitive(s);
    if (!p) throw InvalidArgument("primitive must be \"place\" or \"toss\"");
    return *p;
}

llm::DecodingParams params_of(const std::string& model, double temperature, int max_tokens,
                              const std::vector<std::string>& stop) {
    llm::DecodingParams p;
    p.model_id = model;
    p.temperature = temperature;
    p.max_tokens = max_tokens;
    p.stop_sequences = stop;
    p.validate();
    return p;
}

std::optional<llm::BackendConfig> backend_of(const std::optional<std::filesystem::path>& replay,
                                             const std::optional<std::string>& endpoint,
                                             const std::optional<std::filesystem::path>& cache, const std::string& model) {
    if (!replay && !endpoint) return std::nullopt;
    if (replay && endpoint) throw ConfigError("pass either replay or endpoint, not both");
    llm::BackendConfig c;
    c.mode = replay ? llm::BackendConfig::Mode::Replay : llm::BackendConfig::Mode::Http;
    c.replay_path = replay;
    c.endpoint_url = endpoint;
    c.cache_dir = cache;
    c.model_id = model;
    c.validate();
    return c;
}

std::string evaluate(const std::filesystem::path& dataset, const std::string& method, const std::string& task,
                     std::size_t workers, const std::optional<std::filesystem::path>& replay,
                     const std::optional<std::string>& endpoint, const std::optional<std::filesystem::path>& cache,
                     const std::string& model, const std::optional<std::filesystem::path>& taxonomy,
                     const std::optional<std::filesystem::path>& synonyms,
                     const std::optional<std::filesystem::path>& mapping,
                     const std::optional<std::filesystem::path>& embeddings,
                     const std::optional<std::filesystem::path>& human_summaries) {
    eval::MethodSpec spec;
    auto kind = eval::parse_method_kind(method);
    if (!kind) throw ConfigError("unknown method '" + method + "'");
    spec.kind = *kind;
    spec.backend = backend_of(replay, endpoint, cache, model);
    spec.resources = {taxonomy, synonyms, mapping, embeddings, human_summaries};
    const auto ds = load_dataset(dataset);
    py::gil_scoped_release release;
    const auto ctx = eval::prepare_method(spec);
    if (task == "receptacle") return eval::run_benchmark(ds, ctx, workers).to_json();
    if (task == "primitive") return eval::run_primitive_benchmark(ds, ctx, workers).to_json();
    throw ConfigError("task must be \"receptacle\" or \"primitive\"");
}

sim::Rules rules_for(const sim::World& world, const std::string& rules,
                     const std::optional<std::filesystem::path>& replay, const std::string& model) {
    if (rules == "oracle") return sim::rules_from_preferences(world);
    if (rules == "derive") {
        auto cfg = backend_of(replay, std::nullopt, std::nullopt, model);
        if (!cfg) throw ConfigError("deriving rules needs a replay store");
        auto backend = llm::make_backend(*cfg);
        return sim::derive_rules(world, *backend, cfg->decoding_params());
    }
    return sim::load_rules(rules);
}

py::tuple simulate(const std::filesystem::path& scene, const std::filesystem::path& config, std::uint64_t seed,
                   const std::string& rules, const std::optional<std::filesystem::path>& replay,
                   const std::string& model) {
    const auto world = sim::load_world(scene);
    auto cfg = sim::load_sim_config(config);
    cfg.rng_seed = seed;
    const auto r = rules_for(world, rules, replay, model);
    sim::EpisodeLog log;
    {
        py::gil_scoped_release release;
        log = sim::run_episode(world, r, cfg);
    }
    return py::make_tuple(log.to_json(), log.trace_jsonl());
}

std::string sweep(const std::vector<std::filesystem::path>& scenes, const std::filesystem::path& config,
                  std::size_t seeds, std::uint64_t seed, std::size_t workers) {
    std::vector<sim::World> worlds;
    std::vector<sim::Rules> rules;
    for (const auto& s : scenes) {
        worlds.push_back(sim::load_world(s));
        rules.push_back(sim::rules_from_preferences(worlds.back()));
    }
    auto cfg = sim::load_sim_config(config);
    cfg.rng_seed = seed;
    py::gil_scoped_release release;
    return sim::run_sweep(worlds, rules, cfg, seeds, workers).to_json();
}

py::dict plan_grid(const std::vector<std::vector<bool>>& blocked, std::pair<int, int> start, std::pair<int, int> goal) {
    if (blocked.empty() || blocked[0].empty()) throw InvalidArgument("grid is empty");
    const auto h = static_cast<double>(blocked.size()), w = static_cast<double>(blocked[0].size());
    sim::OccupancyGrid grid(sim::Rect{{0, 0}, {w, h}}, 1.0);
    for (std::size_t y = 0; y < blocked.size(); ++y) {
        if (blocked[y].size() != blocked[0].size()) throw InvalidArgument("grid rows differ in length");
        for (std::size_t x = 0; x < blocked[y].size(); ++x)
            if (blocked[y][x]) grid.set_occupied({static_cast<int>(x), static_cast<int>(y)}, true);
    }
    const auto path = sim::plan_path(grid, sim::Cell{start.first, start.second}, sim::Cell{goal.first, goal.second});
    std::vector<std::pair<int, int>> cells;
    for (const auto& c : path.cells) cells.emplace_back(c.ix, c.iy);
    py::dict out;
    out["cells"] = cells;
    out["orthogonal_steps"] = path.orthogonal_steps;
    out["diagonal_steps"] = path.diagonal_steps;
    out["cost"] = path.cost(1.0);
    return out;
}

} // namespace

PYBIND11_MODULE(_tidybot, m) {
    m.doc() = "Bindings for the tidybot preference summarization, evaluation and simulation library";

    auto& error = py::register_exception<Error>(m, "Error");
    py::register_exception<ValidationError>(m, "ValidationError", error.ptr());
    py::register_exception<ParseError>(m, "ParseError", error.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", error.ptr());

    m.def("normalize_for_match", [](const std::string& s) { return normalize_for_match(s); });

    m.def(
        "cache_key",
        [](const std::string& prompt, const std::string& model, double temperature, int max_tokens,
           const std::vector<std::string>& stop) {
            return llm::cache_key(prompt, params_of(model, temperature, max_tokens, stop));
        },
        py::arg("prompt"), py::arg("model") = std::string(llm::kDefaultModel), py::arg("temperature") = 0.0,
        py::arg("max_tokens") = 256, py::arg("stop") = std::vector<std::string>{"\n\n"});

    m.def(
        "receptacle_summarization_prompt",
        [](const std::vector<std::string>& objects, const std::vector<std::string>& receptacles,
           const std::vector<Pair>& placements) {
            std::vector<Placement> seen;
            for (const auto& [o, r] : placements) seen.push_back({ObjectName(o), ReceptacleName(r)});
            return prompts::build_receptacle_summarization_prompt(objects_of(objects), receptacles_of(receptacles), seen)
                .text;
        },
        py::arg("objects"), py::arg("receptacles"), py::arg("placements"));
    m.def(
        "receptacle_selection_prompt",
        [](const std::string& summary, const std::vector<std::string>& objects,
           const std::vector<std::string>& receptacles) {
            return prompts::build_receptacle_selection_prompt(Summary(summary), objects_of(objects),
                                                              receptacles_of(receptacles))
                .text;
        },
        py::arg("summary"), py::arg("objects"), py::arg("receptacles"));
    m.def(
        "primitive_summarization_prompt",
        [](const std::vector<std::string>& objects, const std::vector<Pair>& choices) {
            std::vector<PrimitiveChoice> ex;
            for (const auto& [o, p] : choices) ex.push_back({ObjectName(o), primitive_of(p)});
            return prompts::build_primitive_summarization_prompt(objects_of(objects), ex).text;
        },
        py::arg("objects"), py::arg("choices"));
    m.def(
        "primitive_selection_prompt",
        [](const std::string& summary, const std::vector<std::string>& objects) {
            return prompts::build_primitive_selection_prompt(Summary(summary), objects_of(objects)).text;
        },
        py::arg("summary"), py::arg("objects"));
    m.def(
        "category_extraction_prompt",
        [](const std::string& summary) { return prompts::build_category_extraction_prompt(Summary(summary)).text; },
        py::arg("summary"));

    m.def(
        "parse_summary", [](const std::string& completion) { return parse::parse_summary(completion).text(); },
        py::arg("completion"));
    m.def(
        "parse_placements",
        [](const std::string& first_object, const std::string& completion) {
            const auto parsed = parse::parse_placements(ObjectName(first_object), completion);
            std::vector<Pair> items;
            for (const auto& p : parsed.items) items.emplace_back(p.object.str(), p.receptacle.str());
            return std::make_pair(items, parsed.warnings);
        },
        py::arg("first_object"), py::arg("completion"));
    m.def(
        "parse_primitive_choices",
        [](const std::string& completion) {
            const auto parsed = parse::parse_primitive_choices(completion);
            std::vector<Pair> items;
            for (const auto& c : parsed.items) items.emplace_back(c.object.str(), std::string(to_string(c.primitive)));
            return std::make_pair(items, parsed.warnings);
        },
        py::arg("completion"));
    m.def(
        "parse_object_list",
        [](const std::string& completion) {
            std::vector<std::string> out;
            for (const auto& n : parse::parse_object_list(prompts::kObjectListPrefix, completion)) out.push_back(n.str());
            return out;
        },
        py::arg("completion"));

    m.def(
        "validate_dataset",
        [](const std::filesystem::path& path) {
            const auto report = validate_dataset(parse_dataset(read_file(path), path.string()));
            return std::make_pair(report.ok(), report.to_text());
        },
        py::arg("path"));

    m.def("evaluate", &evaluate, py::arg("dataset"), py::arg("method") = "summarization",
          py::arg("task") = "receptacle", py::arg("workers") = 1, py::arg("replay") = std::nullopt,
          py::arg("endpoint") = std::nullopt, py::arg("cache") = std::nullopt,
          py::arg("model") = std::string(llm::kDefaultModel), py::arg("taxonomy") = std::nullopt,
          py::arg("synonyms") = std::nullopt, py::arg("mapping") = std::nullopt, py::arg("embeddings") = std::nullopt,
          py::arg("human_summaries") = std::nullopt);

    m.def("simulate", &simulate, py::arg("scene"), py::arg("config"), py::arg("seed") = 0,
          py::arg("rules") = "oracle", py::arg("replay") = std::nullopt,
          py::arg("model") = std::string(llm::kDefaultModel));
    m.def("sweep", &sweep, py::arg("scenes"), py::arg("config"), py::arg("seeds") = 300, py::arg("seed") = 0,
          py::arg("workers") = 1);

    m.def(
        "taxonomy_distance",
        [](const std::filesystem::path& taxonomy, const std::string& a, const std::string& b,
           const std::optional<std::filesystem::path>& synonyms) {
            const auto g = baselines::TaxonomyGraph::load(taxonomy, synonyms);
            return baselines::taxonomy_distance(g, a, b);
        },
        py::arg("taxonomy"), py::arg("a"), py::arg("b"), py::arg("synonyms") = std::nullopt);
    m.def(
        "cosine_similarity",
        [](const std::vector<double>& u, const std::vector<double>& v) { return baselines::cosine_similarity(u, v); },
        py::arg("u"), py::arg("v"));
    m.def("plan_grid", &plan_grid, py::arg("blocked"), py::arg("start"), py::arg("goal"));
}
