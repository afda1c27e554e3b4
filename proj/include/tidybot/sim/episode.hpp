#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tidybot/llm/backend.hpp"
#include "tidybot/promptkit/prompts.hpp"
#include "tidybot/sim/world.hpp"

namespace tidybot::sim {

/// Per-category receptacle and primitive, fixed before the episode starts.
struct Rules {
    std::optional<Summary> receptacle_summary;
    std::optional<Summary> primitive_summary;
    std::vector<ObjectName> categories;
    std::map<ObjectName, CategoryRule> assignments;

    /// Throws ConfigError unless every category has an assignment naming a
    /// receptacle of `world` and every object's category is listed.
    void validate(const World& world) const;
};

/// Perfect rule selection: the world's own preferences.
Rules rules_from_preferences(const World& world);

/// Reads `{"categories": [...], "assignments": {cat: {"receptacle", "primitive"}},
/// "receptacle_summary", "primitive_summary"}`. Assignments may be omitted
/// when both summaries are given.
Rules parse_rules(std::string_view json_text);
Rules load_rules(const std::filesystem::path& path);

/// Fills missing assignments from the summaries with one receptacle and one
/// primitive selection prompt over the category list. Throws ConfigError when
/// the completions leave a category unassigned.
Rules resolve_rules(Rules rules, const World& world, llm::Backend& backend, const llm::DecodingParams& params);

/// Summarizes the world's examples, extracts categories, then resolves.
Rules derive_rules(const World& world, llm::Backend& backend, const llm::DecodingParams& params);

struct ObjectOutcome {
    std::string object;
    std::string category;
    bool localized = false;
    std::optional<std::string> predicted_category;
    std::optional<std::string> chosen_receptacle;
    std::optional<Primitive> chosen_primitive;
    std::optional<bool> executed;  // last primitive attempt
    std::optional<std::string> final_receptacle;
    std::string expected_receptacle;
    bool correct = false;
    std::size_t attempts = 0;
    std::string note;
};

struct TraceRecord {
    std::size_t step = 0;
    std::string action;
    std::string object;
    Pose2D pose;
    std::string outcome;
    std::optional<std::string> predicted_category;
    std::optional<std::string> receptacle;
    std::optional<Primitive> primitive;
};

struct EpisodeLog {
    std::string world;
    std::uint64_t seed = 0;
    std::vector<ObjectOutcome> objects;
    std::vector<TraceRecord> trace;
    std::size_t steps = 0;      // loop iterations
    std::size_t nav_steps = 0;  // controller steps
    std::size_t collisions = 0;
    std::size_t nav_failures = 0;
    bool step_limit_hit = false;

    std::size_t localized = 0;
    std::size_t classifications = 0;
    std::size_t classifications_correct = 0;
    std::size_t executions = 0;
    std::size_t executions_succeeded = 0;
    std::size_t correct = 0;

    [[nodiscard]] double localize_rate() const noexcept;
    [[nodiscard]] std::optional<double> classify_rate() const noexcept;
    [[nodiscard]] std::optional<double> execute_rate() const noexcept;
    /// Correctly deposited objects over all objects.
    [[nodiscard]] double overall() const noexcept;
    [[nodiscard]] std::size_t anomalies() const noexcept { return collisions + nav_failures + (step_limit_hit ? 1 : 0); }

    [[nodiscard]] std::string to_json() const;
    /// One JSON object per loop iteration.
    [[nodiscard]] std::string trace_jsonl() const;
    [[nodiscard]] std::string to_text() const;
};

/// Runs the perception-selection-execution loop on a copy of `world`.
/// Throws ConfigError for invalid rules or config.
EpisodeLog run_episode(const World& world, const Rules& rules, const SimConfig& cfg);

struct SweepResult {
    std::size_t episodes = 0;
    std::uint64_t base_seed = 0;
    std::vector<double> overall;  // per episode, in (seed, world) order
    double mean_overall = 0.0;
    double stddev_overall = 0.0;
    double ci95_half_width = 0.0;
    double pooled_localize = 0.0;
    double pooled_classify = 0.0;
    double pooled_execute = 0.0;
    std::size_t collisions = 0;
    std::size_t nav_failures = 0;

    [[nodiscard]] std::string to_json() const;
    [[nodiscard]] std::string to_text() const;
};

/// Runs every world under `seeds` consecutive seeds starting at
/// cfg.rng_seed. Episode (s, w) uses seed rng_seed + s * worlds + w.
SweepResult run_sweep(const std::vector<World>& worlds, const std::vector<Rules>& rules, const SimConfig& cfg,
                      std::size_t seeds, std::size_t workers);

} // namespace tidybot::sim
