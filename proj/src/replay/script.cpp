#include "tidybot/replay/script.hpp"

#include <algorithm>
#include <map>

#include <nlohmann/json.hpp>

#include "tidybot/core/dataset.hpp"
#include "tidybot/core/errors.hpp"
#include "tidybot/promptkit/prompts.hpp"

namespace tidybot::replay {

namespace {

using json = nlohmann::json;

std::string field(const json& e, const char* key, std::size_t i) {
    auto it = e.find(key);
    if (it == e.end() || !it->is_string())
        throw ParseError("replay script entries[" + std::to_string(i) + "]." + key + ": expected a string", 0,
                         "entries[" + std::to_string(i) + "]." + key);
    return it->get<std::string>();
}

template <std::size_t N>
bool known(const std::string_view (&steps)[N], const std::string& s) {
    return std::find(std::begin(steps), std::end(steps), s) != std::end(steps);
}

class Target {
public:
    Target(const std::string& name, const std::vector<const ScriptEntry*>& entries) : name_(name) {
        for (const auto* e : entries) {
            if (!by_step_.emplace(e->step, e).second)
                throw ConfigError("replay script has two '" + e->step + "' entries for '" + name + "'");
        }
    }

    const ScriptEntry& need(const std::string& step, const std::string& for_step) const {
        auto it = by_step_.find(step);
        if (it == by_step_.end())
            throw ConfigError("'" + for_step + "' for '" + name_ + "' needs a '" + step + "' entry");
        return *it->second;
    }

    Summary summary_for(const ScriptEntry& e, const std::string& summary_step) const {
        if (e.summary) return Summary(*e.summary);
        return parse::parse_summary(need(summary_step, e.step).completion);
    }

    std::vector<ObjectName> categories(const std::string& for_step) const {
        return parse::parse_object_list(prompts::kObjectListPrefix, need("category_extraction", for_step).completion);
    }

private:
    std::string name_;
    std::map<std::string, const ScriptEntry*> by_step_;
};

std::vector<ObjectName> objects_of(const std::vector<PrimitiveChoice>& choices) {
    std::vector<ObjectName> out;
    for (const auto& c : choices) out.push_back(c.object);
    return out;
}

std::vector<ObjectName> objects_of(const std::vector<Placement>& placements) {
    std::vector<ObjectName> out;
    for (const auto& p : placements) out.push_back(p.object);
    return out;
}

const std::vector<PrimitiveChoice>& primitives(const Scenario& sc, bool seen) {
    if (!sc.has_primitives()) throw ConfigError("scenario '" + sc.id + "' has no primitive annotations");
    return seen ? *sc.seen_primitives : *sc.unseen_primitives;
}

PromptText scenario_prompt(const ScriptEntry& e, const Scenario& sc, const Target& t) {
    const auto& s = e.step;
    if (s == "receptacle_summary")
        return prompts::build_receptacle_summarization_prompt(sc.seen_objects(), sc.receptacles, sc.seen);
    if (s == "seen_selection" || s == "unseen_selection")
        return prompts::build_receptacle_selection_prompt(
            t.summary_for(e, "receptacle_summary"), s == "seen_selection" ? sc.seen_objects() : sc.unseen_objects(),
            sc.receptacles);
    if (s == "primitive_summary") {
        const auto& seen = primitives(sc, true);
        return prompts::build_primitive_summarization_prompt(objects_of(seen), seen);
    }
    if (s == "primitive_seen_selection" || s == "primitive_unseen_selection")
        return prompts::build_primitive_selection_prompt(t.summary_for(e, "primitive_summary"),
                                                         objects_of(primitives(sc, s == "primitive_seen_selection")));
    if (s == "category_extraction")
        return prompts::build_category_extraction_prompt(t.summary_for(e, "receptacle_summary"));
    if (s == "examples_only_seen" || s == "examples_only_unseen")
        return prompts::build_examples_only_prompt(
            sc.seen, s == "examples_only_seen" ? sc.seen_objects() : sc.unseen_objects(), sc.receptacles);
    return prompts::build_commonsense_prompt(s == "commonsense_seen" ? sc.seen_objects() : sc.unseen_objects(),
                                             sc.receptacles);
}

PromptText world_prompt(const ScriptEntry& e, const sim::World& w, const Target& t) {
    const auto& s = e.step;
    if (s == "receptacle_summary")
        return prompts::build_receptacle_summarization_prompt(objects_of(w.receptacle_examples), w.receptacle_names(),
                                                              w.receptacle_examples);
    if (s == "primitive_summary")
        return prompts::build_primitive_summarization_prompt(objects_of(w.primitive_examples), w.primitive_examples);
    if (s == "category_extraction")
        return prompts::build_category_extraction_prompt(t.summary_for(e, "receptacle_summary"));
    const auto [rec, prim] = prompts::build_realworld_selection_prompts(
        parse::parse_summary(t.need("receptacle_summary", s).completion),
        parse::parse_summary(t.need("primitive_summary", s).completion), t.categories(s), w.receptacle_names());
    return s == "receptacle_selection" ? rec : prim;
}

} // namespace

ReplayScript parse_replay_script(std::string_view json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("replay script: ") + e.what(), 0, "");
    }
    if (!j.is_object() || !j.contains("entries") || !j["entries"].is_array())
        throw ParseError("replay script: expected an object with an 'entries' array", 0, "entries");
    ReplayScript out;
    std::size_t i = 0;
    for (const auto& e : j["entries"]) {
        if (!e.is_object()) throw ParseError("replay script entries[" + std::to_string(i) + "]: expected an object", 0,
                                            "entries[" + std::to_string(i) + "]");
        ScriptEntry se{field(e, "target", i), field(e, "step", i), field(e, "completion", i), std::nullopt};
        if (e.contains("summary")) se.summary = field(e, "summary", i);
        out.entries.push_back(std::move(se));
        ++i;
    }
    return out;
}

ReplayScript load_replay_script(const std::filesystem::path& path) { return parse_replay_script(read_file(path)); }

std::vector<llm::StoreRecord> compile_replay(const ReplayScript& script, const Dataset& dataset,
                                             const std::vector<sim::World>& worlds,
                                             const llm::DecodingParams& params) {
    std::map<std::string, std::vector<const ScriptEntry*>> grouped;
    for (const auto& e : script.entries) grouped[e.target].push_back(&e);
    std::map<std::string, Target> targets;
    for (const auto& [name, entries] : grouped) targets.emplace(name, Target(name, entries));

    std::vector<llm::StoreRecord> out;
    for (const auto& e : script.entries) {
        const auto* sc = dataset.find(e.target);
        auto w = std::find_if(worlds.begin(), worlds.end(), [&](const sim::World& x) { return x.name == e.target; });
        if (sc && w != worlds.end()) throw ConfigError("replay target '" + e.target + "' is both a scenario and a world");
        const auto& t = targets.at(e.target);
        PromptText prompt{"", PromptKind::Commonsense};
        if (sc) {
            if (!known(kScenarioSteps, e.step))
                throw ConfigError("unknown scenario step '" + e.step + "' for '" + e.target + "'");
            prompt = scenario_prompt(e, *sc, t);
        } else if (w != worlds.end()) {
            if (!known(kWorldSteps, e.step))
                throw ConfigError("unknown world step '" + e.step + "' for '" + e.target + "'");
            prompt = world_prompt(e, *w, t);
        } else {
            throw ConfigError("replay target '" + e.target + "' is neither a scenario nor a world");
        }
        auto rec = llm::make_store_record(prompt, params, e.completion);
        auto dup = std::find_if(out.begin(), out.end(), [&](const llm::StoreRecord& r) { return r.key == rec.key; });
        if (dup == out.end()) {
            out.push_back(std::move(rec));
        } else if (dup->completion != rec.completion) {
            throw ConfigError("replay script gives two completions for the prompt of '" + e.step + "' on '" +
                              e.target + "'");
        }
    }
    return out;
}

std::string render_jsonl(const std::vector<llm::StoreRecord>& records) {
    std::string out;
    for (const auto& r : records) {
        out += llm::to_jsonl_line(r);
        if (out.empty() || out.back() != '\n') out += '\n';
    }
    return out;
}

} // namespace tidybot::replay
