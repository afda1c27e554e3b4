#include "tidybot/cli/cli.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tidybot/core/dataset.hpp"
#include "tidybot/eval/harness.hpp"
#include "tidybot/eval/pipeline.hpp"
#include "tidybot/llm/backend.hpp"
#include "tidybot/sim/episode.hpp"

namespace tidybot::cli {

namespace {

namespace fs = std::filesystem;

struct BackendFlags {
    std::string backend;
    std::string replay;
    std::string endpoint;
    std::string model;
    std::string cache;
    std::string config;

    void add_to(CLI::App& app) {
        app.add_option("--backend-config", config, "JSON backend configuration file; excludes the other backend flags");
        app.add_option("--backend", backend, "Completion source")->check(CLI::IsMember({"http", "replay"}));
        app.add_option("--replay", replay, "Replay store (.jsonl) for --backend replay");
        app.add_option("--endpoint", endpoint, "Completion endpoint URL for --backend http");
        app.add_option("--model", model, "Model id sent with each request");
        app.add_option("--cache", cache, "Completion cache directory (http only)");
    }

    void check_exclusive() const {
        if (!config.empty() && (!backend.empty() || !replay.empty() || !endpoint.empty() || !model.empty() || !cache.empty()))
            throw ConfigError("--backend-config cannot be combined with other backend flags");
        if (!replay.empty() && (!endpoint.empty() || !cache.empty()))
            throw ConfigError("--replay cannot be combined with --endpoint or --cache");
    }

    [[nodiscard]] bool given() const { return !config.empty() || !backend.empty() || !replay.empty() || !endpoint.empty(); }

    [[nodiscard]] llm::BackendConfig resolve() const {
        check_exclusive();
        if (!config.empty()) return llm::load_backend_config(config);
        llm::BackendConfig c;
        std::string mode = backend;
        if (mode.empty()) mode = !replay.empty() ? "replay" : !endpoint.empty() ? "http" : "";
        if (mode.empty()) throw ConfigError("a backend is required: pass --backend, --replay or --backend-config");
        c.mode = mode == "http" ? llm::BackendConfig::Mode::Http : llm::BackendConfig::Mode::Replay;
        if (!replay.empty()) c.replay_path = replay;
        if (!endpoint.empty()) c.endpoint_url = endpoint;
        if (!cache.empty()) c.cache_dir = cache;
        if (!model.empty()) c.model_id = model;
        if (c.mode == llm::BackendConfig::Mode::Replay && !endpoint.empty())
            throw ConfigError("--endpoint needs --backend http");
        if (c.mode == llm::BackendConfig::Mode::Http && !replay.empty())
            throw ConfigError("--replay needs --backend replay");
        c.validate();
        return c;
    }
};

struct MethodFlags {
    std::string method = "summarization";
    std::string taxonomy;
    std::string synonyms;
    std::string mapping;
    std::string embeddings;
    std::string human_summaries;

    void add_to(CLI::App& app) {
        app.add_option("--method", method,
                       "summarization, examples-only, commonsense, taxonomy, embedding or human-summary")
            ->capture_default_str();
        app.add_option("--taxonomy", taxonomy, "Taxonomy edge list (concept<TAB>concept)");
        app.add_option("--synonyms", synonyms, "Taxonomy surface names (name<TAB>concept)");
        app.add_option("--mapping", mapping, "Manual object-name mapping (name<TAB>concept)");
        app.add_option("--embeddings", embeddings, "Embedding table (name<TAB>v1 v2 ...)");
        app.add_option("--human-summaries", human_summaries, "Per-scenario summaries (scenario_id<TAB>summary)");
    }

    [[nodiscard]] eval::MethodSpec resolve(const BackendFlags& b) const {
        b.check_exclusive();
        eval::MethodSpec spec;
        auto kind = eval::parse_method_kind(method);
        if (!kind) throw ConfigError("unknown method '" + method + "'");
        spec.kind = *kind;
        if (eval::uses_llm(spec.kind)) spec.backend = b.resolve();
        auto opt = [](const std::string& s) { return s.empty() ? std::nullopt : std::optional<fs::path>(s); };
        spec.resources = {opt(taxonomy), opt(synonyms), opt(mapping), opt(embeddings), opt(human_summaries)};
        return spec;
    }
};

struct Examples {
    std::vector<ReceptacleName> receptacles;
    std::vector<Placement> placements;
    std::vector<PrimitiveChoice> primitives;
};

/// `{"receptacles": [...], "placements": [{"object","receptacle"}], "primitives": [{"object","primitive"}]}`
Examples load_examples(const fs::path& path) {
    using nlohmann::json;
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what(), 0, "");
    }
    Examples ex;
    try {
        for (const auto& r : j.value("receptacles", json::array())) ex.receptacles.emplace_back(r.get<std::string>());
        for (const auto& p : j.value("placements", json::array()))
            ex.placements.push_back({ObjectName(p.at("object").get<std::string>()),
                                     ReceptacleName(p.at("receptacle").get<std::string>())});
        for (const auto& p : j.value("primitives", json::array())) {
            auto prim = parse_primitive(p.at("primitive").get<std::string>());
            if (!prim) throw ParseError(path.string() + ": primitive must be \"place\" or \"toss\"", 0, "primitive");
            ex.primitives.push_back({ObjectName(p.at("object").get<std::string>()), *prim});
        }
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what(), 0, "");
    } catch (const InvalidName& e) {
        throw ParseError(path.string() + ": " + e.what(), 0, "");
    }
    return ex;
}

void write_outputs(const fs::path& dir, const eval::BenchmarkReport& report) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create report directory " + dir.string() + ": " + ec.message());
    write_file_atomic(dir / "report.json", report.to_json());
    write_file_atomic(dir / "report.csv", report.to_csv());
}

int exit_code_of(const Error& e) {
    switch (e.exit_class()) {
    case Error::Class::Validation: return kValidation;
    case Error::Class::Backend: return kBackend;
    case Error::Class::Usage: return kUsage;
    }
    return kUsage;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Personalized tidying: preference summarization, benchmark evaluation and simulation", "tidybot"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "tidybot 0.1.0");

    // validate
    std::string dataset_path;
    auto* validate = app.add_subcommand("validate", "Check a benchmark dataset against its invariants");
    validate->add_option("--dataset", dataset_path, "Dataset JSON file")->required();

    // summarize
    std::string examples_path, mode = "receptacle";
    BackendFlags sum_backend;
    auto* summarize = app.add_subcommand("summarize", "Summarize seen examples into a rule");
    summarize->add_option("--examples", examples_path, "Examples JSON file")->required();
    summarize->add_option("--mode", mode, "What the examples choose")
        ->check(CLI::IsMember({"receptacle", "primitive"}))
        ->capture_default_str();
    sum_backend.add_to(*summarize);

    // eval / eval-primitives
    std::string eval_dataset, report_dir = "report";
    std::size_t workers = 1;
    BackendFlags eval_backend;
    MethodFlags eval_method;
    auto* evalc = app.add_subcommand("eval", "Score a method on a benchmark dataset");
    auto* evalp = app.add_subcommand("eval-primitives", "Score primitive selection on an annotated dataset");
    for (auto* sub : {evalc, evalp}) {
        sub->add_option("--dataset", eval_dataset, "Dataset JSON file")->required();
        sub->add_option("--workers", workers, "Parallel scenario evaluations")
            ->check(CLI::Range(std::size_t{1}, std::size_t{256}))
            ->capture_default_str();
        sub->add_option("--report", report_dir, "Directory for report.json and report.csv")->capture_default_str();
        eval_method.add_to(*sub);
        eval_backend.add_to(*sub);
    }

    // simulate / sweep
    std::vector<std::string> scenes;
    std::string rules_path, config_path, trace_path, log_path, sweep_report;
    bool derive = false, oracle = false;
    std::uint64_t seed = 0;
    std::size_t seeds = 300, sim_workers = 1;
    BackendFlags sim_backend;
    auto* simulate = app.add_subcommand("simulate", "Run one tidying episode in the 2D simulator");
    simulate->add_option("--scenario", scenes, "Scene JSON file")->required()->expected(1);
    simulate->add_option("--rules", rules_path, "Rules JSON file");
    simulate->add_flag("--derive-rules", derive, "Derive rules from the scene's examples with the LLM");
    simulate->add_flag("--oracle-rules", oracle, "Use the scene's ground-truth preferences as rules");
    simulate->add_option("--config", config_path, "Simulator config JSON file")->required();
    simulate->add_option("--seed", seed, "Random seed")->capture_default_str();
    simulate->add_option("--trace", trace_path, "Per-iteration trace output (.jsonl)");
    simulate->add_option("--log", log_path, "Episode log output (.json)");
    sim_backend.add_to(*simulate);

    auto* sweep = app.add_subcommand("sweep", "Run seeded episodes over scenes and report the mean put-away rate");
    sweep->add_option("--scenario", scenes, "Scene JSON files")->required();
    sweep->add_option("--rules", rules_path, "Rules JSON file applied to every scene");
    sweep->add_flag("--oracle-rules", oracle, "Use each scene's ground-truth preferences as rules");
    sweep->add_option("--config", config_path, "Simulator config JSON file")->required();
    sweep->add_option("--seed", seed, "First seed")->capture_default_str();
    sweep->add_option("--seeds", seeds, "Seeds per scene")->check(CLI::PositiveNumber)->capture_default_str();
    sweep->add_option("--workers", sim_workers, "Parallel episodes")
        ->check(CLI::Range(std::size_t{1}, std::size_t{256}))
        ->capture_default_str();
    sweep->add_option("--report", sweep_report, "Sweep result output (.json)");

    // cache-info
    std::string store_path;
    auto* cache_info = app.add_subcommand("cache-info", "Describe a replay store or completion cache");
    cache_info->add_option("--store", store_path, "Store file (.jsonl) or cache directory")->required();

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (validate->parsed()) {
            const auto ds = parse_dataset(read_file(dataset_path), dataset_path);
            const auto report = validate_dataset(ds);
            out << report.to_text();
            return report.ok() ? kOk : kValidation;
        }

        if (summarize->parsed()) {
            const auto ex = load_examples(examples_path);
            const auto cfg = sum_backend.resolve();
            auto backend = llm::make_backend(cfg);
            const auto params = cfg.decoding_params();
            if (mode == "receptacle") {
                if (ex.placements.empty() || ex.receptacles.empty())
                    throw ConfigError("examples file has no receptacles or placements");
                auto summary = pipeline::summarize_receptacles(ex.receptacles, ex.placements, *backend, params);
                out << "summary: " << summary.text() << "\n";
                summary = pipeline::extract_categories(summary, *backend, params);
                out << "categories:";
                for (const auto& c : *summary.categories()) out << " \"" << c.str() << "\"";
                out << "\n";
            } else {
                if (ex.primitives.empty()) throw ConfigError("examples file has no primitive examples");
                const auto summary = pipeline::summarize_primitives(ex.primitives, *backend, params);
                out << "summary: " << summary.text() << "\n";
            }
            return kOk;
        }

        if (evalc->parsed() || evalp->parsed()) {
            const auto spec = eval_method.resolve(eval_backend);
            const auto ds = load_dataset(eval_dataset);
            const auto method = eval::prepare_method(spec);
            const auto report = evalc->parsed() ? eval::run_benchmark(ds, method, workers)
                                                : eval::run_primitive_benchmark(ds, method, workers);
            write_outputs(report_dir, report);
            out << report.to_text();
            return kOk;
        }

        if (simulate->parsed()) {
            if ((!rules_path.empty()) + derive + oracle != 1)
                throw ConfigError("pass exactly one of --rules, --derive-rules or --oracle-rules");
            const auto world = sim::load_world(scenes.front());
            auto cfg = sim::load_sim_config(config_path);
            cfg.rng_seed = seed;
            sim::Rules rules;
            if (oracle) {
                rules = sim::rules_from_preferences(world);
            } else {
                std::shared_ptr<llm::Backend> backend;
                llm::DecodingParams params;
                if (derive || sim_backend.given()) {
                    const auto bcfg = sim_backend.resolve();
                    backend = llm::make_backend(bcfg);
                    params = bcfg.decoding_params();
                }
                if (derive) {
                    rules = sim::derive_rules(world, *backend, params);
                } else {
                    rules = sim::load_rules(rules_path);
                    const bool complete = std::all_of(rules.categories.begin(), rules.categories.end(),
                                                      [&](const ObjectName& c) { return rules.assignments.count(c); });
                    if (!complete) {
                        if (!backend) throw ConfigError("rules without assignments need a backend");
                        rules = sim::resolve_rules(std::move(rules), world, *backend, params);
                    }
                }
            }
            const auto log = sim::run_episode(world, rules, cfg);
            if (!trace_path.empty()) write_file_atomic(trace_path, log.trace_jsonl());
            if (!log_path.empty()) write_file_atomic(log_path, log.to_json());
            out << log.to_text();
            return kOk;
        }

        if (sweep->parsed()) {
            if (rules_path.empty() == !oracle) throw ConfigError("pass exactly one of --rules or --oracle-rules");
            std::vector<sim::World> worlds;
            std::vector<sim::Rules> rules;
            std::optional<sim::Rules> shared;
            if (!rules_path.empty()) shared = sim::load_rules(rules_path);
            for (const auto& s : scenes) {
                worlds.push_back(sim::load_world(s));
                rules.push_back(shared ? *shared : sim::rules_from_preferences(worlds.back()));
            }
            auto cfg = sim::load_sim_config(config_path);
            cfg.rng_seed = seed;
            const auto result = sim::run_sweep(worlds, rules, cfg, seeds, sim_workers);
            if (!sweep_report.empty()) write_file_atomic(sweep_report, result.to_json());
            out << result.to_text();
            return kOk;
        }

        if (cache_info->parsed()) {
            fs::path p = store_path;
            if (fs::is_directory(p)) p /= llm::kCacheFileName;
            const auto info = llm::inspect_store(p);
            out << "records " << info.records << "\nunique keys " << info.unique_keys << "\n";
            for (const auto& [model, n] : info.per_model) out << "model " << model << ": " << n << "\n";
            out << "content sha256 " << info.content_hash << "\n";
            return kOk;
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_of(e);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}

} // namespace tidybot::cli
