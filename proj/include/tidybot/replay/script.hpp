#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tidybot/core/types.hpp"
#include "tidybot/llm/backend.hpp"
#include "tidybot/sim/world.hpp"

namespace tidybot::replay {

/// One hand-supplied completion for the prompt a pipeline step would send.
/// `target` names a scenario id or a world name. `summary` overrides the
/// summary a selection step is conditioned on.
struct ScriptEntry {
    std::string target;
    std::string step;
    std::string completion;
    std::optional<std::string> summary;
};

struct ReplayScript {
    std::vector<ScriptEntry> entries;
};

/// Steps accepted for scenario targets.
inline constexpr std::string_view kScenarioSteps[] = {
    "receptacle_summary", "seen_selection",     "unseen_selection",     "primitive_summary",
    "primitive_seen_selection", "primitive_unseen_selection", "category_extraction", "examples_only_seen",
    "examples_only_unseen", "commonsense_seen", "commonsense_unseen"};

/// Steps accepted for world targets.
inline constexpr std::string_view kWorldSteps[] = {"receptacle_summary", "category_extraction", "primitive_summary",
                                                   "receptacle_selection", "primitive_selection"};

/// Reads `{"entries": [{"target", "step", "completion", "summary"?}]}`.
/// Throws ParseError on malformed input.
ReplayScript parse_replay_script(std::string_view json_text);
ReplayScript load_replay_script(const std::filesystem::path& path);

/// Builds each entry's prompt with the same builders the pipeline uses and
/// pairs it with the completion. Selection steps read their summary from the
/// target's summary entry (or the entry's own `summary`); world selection
/// steps also need the target's category_extraction entry. Throws ConfigError
/// for unknown targets or steps, missing dependencies and duplicate entries.
/// Entries whose prompts coincide collapse to one record when their
/// completions agree.
std::vector<llm::StoreRecord> compile_replay(const ReplayScript& script, const Dataset& dataset,
                                             const std::vector<sim::World>& worlds,
                                             const llm::DecodingParams& params);

/// One jsonl line per record, in script order.
std::string render_jsonl(const std::vector<llm::StoreRecord>& records);

} // namespace tidybot::replay
