#include "tidybot/sim/episode.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <deque>
#include <numbers>
#include <set>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "tidybot/core/dataset.hpp"
#include "tidybot/eval/pipeline.hpp"

namespace tidybot::sim {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::optional<Cell> nearest_free_cell(const OccupancyGrid& grid, Cell from) {
    if (!grid.in_bounds(from)) return std::nullopt;
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(grid.width()) * static_cast<std::size_t>(grid.height()), 0);
    auto idx = [&](Cell c) { return static_cast<std::size_t>(c.iy) * static_cast<std::size_t>(grid.width()) + static_cast<std::size_t>(c.ix); };
    std::deque<Cell> queue{from};
    seen[idx(from)] = 1;
    while (!queue.empty()) {
        const Cell c = queue.front();
        queue.pop_front();
        if (!grid.occupied(c)) return c;
        for (auto [dx, dy] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
            const Cell n{c.ix + dx, c.iy + dy};
            if (!grid.in_bounds(n) || seen[idx(n)]) continue;
            seen[idx(n)] = 1;
            queue.push_back(n);
        }
    }
    return std::nullopt;
}

/// First free cell walking from `target` toward `from`.
Vec2 approach_point(const OccupancyGrid& grid, Vec2 target, Vec2 from) {
    const double len = distance(target, from);
    const double step = grid.resolution() / 4.0;
    for (double s = 0.0; s <= len; s += step) {
        const Vec2 p = len > 0.0 ? target + (s / len) * (from - target) : target;
        if (!grid.bounds().contains(p)) continue;
        const Cell c = grid.cell_of(p);
        if (!grid.occupied(c)) return grid.center_of(c);
    }
    const Vec2 clamped = grid.bounds().clamp(target);
    if (auto c = nearest_free_cell(grid, grid.cell_of(clamped))) return grid.center_of(*c);
    throw NoPath("no free cell near the target");
}

double distance_to(const Rect& r, Vec2 p) { return distance(r.clamp(p), p); }

class Navigator {
public:
    Navigator(const OccupancyGrid& plan, const OccupancyGrid& body, const SimConfig& cfg, EpisodeLog& log)
        : plan_(plan), body_(body), cfg_(cfg), log_(log) {}

    /// Drives `pose` to within one cell of `goal`. Returns false when the
    /// step budget runs out or no path exists.
    bool go(Pose2D& pose, Vec2 goal) {
        const double tol = plan_.resolution();
        if (distance(pose.position(), goal) <= tol) return true;
        auto start = nearest_free_cell(plan_, plan_.cell_of(plan_.bounds().clamp(pose.position())));
        if (!start) return false;
        PlannedPath plan;
        try {
            plan = plan_path(plan_, *start, plan_.cell_of(goal));
        } catch (const NoPath&) {
            return false;
        } catch (const BlockedEndpoint&) {
            return false;
        }
        auto path = plan.waypoints;
        path.front() = pose.position();
        if (path.size() == 1) path.push_back(goal);

        const Vec2 first = lookahead_point(pose, path, cfg_.lookahead);
        const double bearing = std::atan2(first.y - pose.y, first.x - pose.x);
        if (std::abs(normalize_angle(bearing - pose.theta)) > std::numbers::pi / 2) {
            pose = Pose2D::make(pose.x, pose.y, bearing);
            ++log_.nav_steps;
        }

        const double length = plan.cost(plan_.resolution()) + distance(path.front(), plan_.center_of(*start));
        const auto budget = static_cast<std::size_t>(10.0 * std::ceil(length / (cfg_.speed * cfg_.dt))) + 20;
        for (std::size_t k = 0; k < budget; ++k) {
            pose = pure_pursuit_step(pose, path, cfg_.lookahead, cfg_.speed, cfg_.dt);
            ++log_.nav_steps;
            const Vec2 p = pose.position();
            if (!body_.bounds().contains(p) || body_.occupied(body_.cell_of(p))) ++log_.collisions;
            if (distance(p, goal) <= tol) return true;
        }
        return false;
    }

private:
    const OccupancyGrid& plan_;
    const OccupancyGrid& body_;
    const SimConfig& cfg_;
    EpisodeLog& log_;
};

void check_invariants(const World& w, std::size_t initial) {
    std::size_t grasped = w.count(ObjectState::Grasped);
    if (grasped > 1) throw std::logic_error("more than one object grasped");
    if (w.count(ObjectState::OnFloor) + grasped + w.count(ObjectState::Deposited) != initial)
        throw std::logic_error("object count not conserved");
}

ordered_json opt(const std::optional<std::string>& s) { return s ? ordered_json(*s) : ordered_json(nullptr); }
ordered_json opt(const std::optional<double>& d) { return d ? ordered_json(*d) : ordered_json(nullptr); }
ordered_json opt(const std::optional<Primitive>& p) {
    return p ? ordered_json(std::string(to_string(*p))) : ordered_json(nullptr);
}

double ratio(std::size_t a, std::size_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b); }

CategoryRule parse_rule(const json& j, const std::string& path) {
    if (!j.is_object() || !j.contains("receptacle") || !j.contains("primitive") || !j["receptacle"].is_string() ||
        !j["primitive"].is_string())
        throw ParseError(path + ": expected {\"receptacle\", \"primitive\"}", 0, path);
    auto prim = parse_primitive(j["primitive"].get<std::string>());
    if (!prim) throw ParseError(path + ".primitive: expected \"place\" or \"toss\"", 0, path);
    try {
        return {ReceptacleName(j["receptacle"].get<std::string>()), *prim};
    } catch (const InvalidName& e) {
        throw ParseError(path + ".receptacle: " + e.what(), 0, path);
    }
}

} // namespace

void Rules::validate(const World& world) const {
    if (categories.empty()) throw ConfigError("rules list no categories");
    std::set<ObjectName> cats(categories.begin(), categories.end());
    if (cats.size() != categories.size()) throw ConfigError("rules list a category twice");
    for (const auto& c : categories) {
        auto it = assignments.find(c);
        if (it == assignments.end()) throw ConfigError("category '" + c.str() + "' has no receptacle assignment");
        if (!world.receptacle_index(it->second.receptacle))
            throw ConfigError("category '" + c.str() + "' is assigned to unknown receptacle '" +
                              it->second.receptacle.str() + "'");
    }
    for (const auto& o : world.objects)
        if (!cats.count(o.category))
            throw ConfigError("object '" + o.name.str() + "' has category '" + o.category.str() +
                              "' missing from the rules");
}

Rules rules_from_preferences(const World& world) {
    Rules r;
    for (const auto& [cat, rule] : world.preferences) {
        r.categories.push_back(cat);
        r.assignments.emplace(cat, rule);
    }
    return r;
}

Rules parse_rules(std::string_view src) {
    json j;
    try {
        j = json::parse(src);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("rules file: ") + e.what(), 0, "");
    }
    if (!j.is_object()) throw ParseError("rules file: expected an object", 0, "");
    Rules r;
    try {
        if (j.contains("receptacle_summary")) r.receptacle_summary = Summary(j["receptacle_summary"].get<std::string>());
        if (j.contains("primitive_summary")) r.primitive_summary = Summary(j["primitive_summary"].get<std::string>());
        for (const auto& c : j.value("categories", json::array())) r.categories.emplace_back(c.get<std::string>());
        if (j.contains("assignments"))
            for (const auto& [cat, rule] : j["assignments"].items())
                r.assignments.emplace(ObjectName(cat), parse_rule(rule, "assignments." + cat));
    } catch (const json::type_error& e) {
        throw ParseError(std::string("rules file: ") + e.what(), 0, "");
    } catch (const InvalidName& e) {
        throw ParseError(std::string("rules file: ") + e.what(), 0, "");
    }
    if (r.categories.empty())
        for (const auto& [cat, rule] : r.assignments) r.categories.push_back(cat);
    if (r.receptacle_summary && r.receptacle_summary->categories() == std::nullopt && !r.categories.empty())
        r.receptacle_summary = r.receptacle_summary->with_categories(r.categories);
    return r;
}

Rules load_rules(const std::filesystem::path& path) {
    try {
        return parse_rules(read_file(path));
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what(), e.line(), e.field());
    }
}

Rules resolve_rules(Rules rules, const World& world, llm::Backend& backend, const llm::DecodingParams& params) {
    if (rules.categories.empty()) throw ConfigError("rules list no categories");
    const bool complete = std::all_of(rules.categories.begin(), rules.categories.end(),
                                      [&](const ObjectName& c) { return rules.assignments.count(c) != 0; });
    if (complete) return rules;
    if (!rules.receptacle_summary || !rules.primitive_summary)
        throw ConfigError("rules need explicit assignments or both summaries");

    const auto [rec_prompt, prim_prompt] = prompts::build_realworld_selection_prompts(
        *rules.receptacle_summary, *rules.primitive_summary, rules.categories, world.receptacle_names());
    const auto placements =
        parse::parse_placements(rules.categories.front(), backend.complete(rec_prompt, params).completion).items;
    const auto choices = parse::parse_primitive_choices(backend.complete(prim_prompt, params).completion).items;

    for (const auto& c : rules.categories) {
        if (rules.assignments.count(c)) continue;
        auto p = std::find_if(placements.begin(), placements.end(), [&](const Placement& x) { return x.object == c; });
        auto q = std::find_if(choices.begin(), choices.end(), [&](const PrimitiveChoice& x) { return x.object == c; });
        if (p == placements.end()) throw ConfigError("no receptacle was selected for category '" + c.str() + "'");
        if (q == choices.end()) throw ConfigError("no primitive was selected for category '" + c.str() + "'");
        rules.assignments.emplace(c, CategoryRule{p->receptacle, q->primitive});
    }
    return rules;
}

Rules derive_rules(const World& world, llm::Backend& backend, const llm::DecodingParams& params) {
    if (world.receptacle_examples.empty() || world.primitive_examples.empty())
        throw ConfigError("world '" + world.name + "' has no seen examples to derive rules from");
    auto rec = pipeline::summarize_receptacles(world.receptacle_names(), world.receptacle_examples, backend, params);
    rec = pipeline::extract_categories(rec, backend, params);
    auto prim = pipeline::summarize_primitives(world.primitive_examples, backend, params);
    Rules r;
    r.categories = *rec.categories();
    r.receptacle_summary = std::move(rec);
    r.primitive_summary = std::move(prim);
    return resolve_rules(std::move(r), world, backend, params);
}

double EpisodeLog::localize_rate() const noexcept { return ratio(localized, objects.size()); }

std::optional<double> EpisodeLog::classify_rate() const noexcept {
    if (classifications == 0) return std::nullopt;
    return ratio(classifications_correct, classifications);
}

std::optional<double> EpisodeLog::execute_rate() const noexcept {
    if (executions == 0) return std::nullopt;
    return ratio(executions_succeeded, executions);
}

double EpisodeLog::overall() const noexcept { return ratio(correct, objects.size()); }

std::string EpisodeLog::to_json() const {
    ordered_json objs = ordered_json::array();
    for (const auto& o : objects)
        objs.push_back({{"object", o.object},
                        {"category", o.category},
                        {"localized", o.localized},
                        {"predicted_category", opt(o.predicted_category)},
                        {"chosen_receptacle", opt(o.chosen_receptacle)},
                        {"chosen_primitive", opt(o.chosen_primitive)},
                        {"executed", o.executed ? ordered_json(*o.executed) : ordered_json(nullptr)},
                        {"final_receptacle", opt(o.final_receptacle)},
                        {"expected_receptacle", o.expected_receptacle},
                        {"correct", o.correct},
                        {"attempts", o.attempts},
                        {"note", o.note}});
    ordered_json doc{{"world", world},
                     {"seed", seed},
                     {"objects_total", objects.size()},
                     {"steps", steps},
                     {"nav_steps", nav_steps},
                     {"collisions", collisions},
                     {"nav_failures", nav_failures},
                     {"step_limit_hit", step_limit_hit},
                     {"rates",
                      {{"localize", localize_rate()},
                       {"classify", opt(classify_rate())},
                       {"execute", opt(execute_rate())},
                       {"overall", overall()}}},
                     {"objects", std::move(objs)}};
    return doc.dump(2) + "\n";
}

std::string EpisodeLog::trace_jsonl() const {
    std::string out;
    for (const auto& t : trace) {
        ordered_json j{{"step", t.step},
                       {"action", t.action},
                       {"object", t.object},
                       {"pose", {t.pose.x, t.pose.y, t.pose.theta}},
                       {"outcome", t.outcome},
                       {"predicted_category", opt(t.predicted_category)},
                       {"receptacle", opt(t.receptacle)},
                       {"primitive", opt(t.primitive)}};
        out += j.dump() + "\n";
    }
    return out;
}

std::string EpisodeLog::to_text() const {
    char buf[256];
    auto pct = [](std::optional<double> v) {
        char b[16];
        if (!v) return std::string("n/a");
        std::snprintf(b, sizeof b, "%.2f", *v);
        return std::string(b);
    };
    std::snprintf(buf, sizeof buf,
                  "world %s, seed %llu: %zu objects, %zu steps, %zu controller steps\n"
                  "localize %s  classify %s  execute %s  overall %s\n",
                  world.c_str(), static_cast<unsigned long long>(seed), objects.size(), steps, nav_steps,
                  pct(localize_rate()).c_str(), pct(classify_rate()).c_str(), pct(execute_rate()).c_str(),
                  pct(overall()).c_str());
    std::string out = buf;
    if (anomalies() != 0) {
        std::snprintf(buf, sizeof buf, "anomalies: %zu collisions, %zu navigation failures%s\n", collisions,
                      nav_failures, step_limit_hit ? ", step limit reached" : "");
        out += buf;
    }
    return out;
}

EpisodeLog run_episode(const World& initial, const Rules& rules, const SimConfig& cfg) {
    cfg.validate();
    initial.validate();
    rules.validate(initial);
    if (cfg.speed * cfg.dt > initial.resolution)
        throw ConfigError("speed * dt must not exceed the grid resolution");

    World world = initial;
    const auto footprints = world.footprints();
    const auto plan_grid = build_occupancy_grid(footprints, world.bounds, world.resolution, cfg.inflation);
    const auto body_grid = build_occupancy_grid(footprints, world.bounds, world.resolution, 0.0);

    EpisodeLog log;
    log.world = world.name;
    log.seed = cfg.rng_seed;
    Navigator nav(plan_grid, body_grid, cfg, log);
    CounterRng localize(cfg.rng_seed, Stream::Localize);
    CounterRng classify(cfg.rng_seed, Stream::Classify);
    CounterRng execute(cfg.rng_seed, Stream::Execute);

    const auto total = world.objects.size();
    for (auto& o : world.objects) {
        o.detected = localize.bernoulli(cfg.p_localize);
        ObjectOutcome out;
        out.object = o.name.str();
        out.category = o.category.str();
        out.localized = o.detected;
        out.expected_receptacle = world.preferences.at(o.category).receptacle.str();
        if (o.detected) ++log.localized;
        else out.note = "not localized";
        log.objects.push_back(std::move(out));
    }

    Pose2D& pose = world.robot;
    for (;;) {
        check_invariants(world, total);
        const auto next = closest_object(world, pose);
        if (!next) break;
        if (log.steps >= cfg.max_steps) {
            log.step_limit_hit = true;
            break;
        }
        ++log.steps;
        auto& obj = world.objects[*next];
        auto& out = log.objects[*next];
        TraceRecord rec;
        rec.step = log.steps;
        rec.object = obj.name.str();
        auto finish = [&](std::string action, std::string outcome) {
            rec.action = std::move(action);
            rec.outcome = std::move(outcome);
            rec.pose = pose;
            log.trace.push_back(rec);
        };

        Vec2 approach;
        try {
            approach = approach_point(plan_grid, obj.position, pose.position());
        } catch (const NoPath&) {
            approach = obj.position;
        }
        if (!nav.go(pose, approach) || distance(pose.position(), obj.position) > cfg.grasp_reach) {
            ++log.nav_failures;
            obj.retired = true;
            out.note = "object unreachable";
            finish("approach", "unreachable");
            continue;
        }
        obj.state = ObjectState::Grasped;

        const ObjectName predicted = simulate_classify(obj, rules.categories, cfg.p_classify, classify);
        ++log.classifications;
        if (predicted == obj.category) ++log.classifications_correct;
        const CategoryRule& rule = rules.assignments.at(predicted);
        const auto rid = *world.receptacle_index(rule.receptacle);
        const auto& body = world.receptacles[rid];
        out.predicted_category = predicted.str();
        out.chosen_receptacle = rule.receptacle.str();
        out.chosen_primitive = rule.primitive;
        rec.predicted_category = predicted.str();
        rec.receptacle = rule.receptacle.str();
        rec.primitive = rule.primitive;

        Vec2 drop_approach;
        try {
            drop_approach = approach_point(plan_grid, body.drop_point, pose.position());
        } catch (const NoPath&) {
            drop_approach = pose.position();
        }
        const double reach = rule.primitive == Primitive::Place ? cfg.place_reach : cfg.toss_reach;
        if (!nav.go(pose, drop_approach) || distance_to(body.footprint, pose.position()) > reach) {
            ++log.nav_failures;
            obj.state = ObjectState::OnFloor;
            obj.position = pose.position();
            obj.retired = true;
            out.note = "receptacle unreachable";
            finish("transport", "unreachable");
            continue;
        }

        ++out.attempts;
        ++obj.attempts;
        ++log.executions;
        const bool ok = execute_primitive(world, rule.primitive, rid, cfg.p_place, cfg.p_toss, execute);
        out.executed = ok;
        if (ok) {
            ++log.executions_succeeded;
            out.final_receptacle = body.name.str();
            out.correct = body.name.str() == out.expected_receptacle;
            out.note.clear();
            finish("put_away", out.correct ? "deposited" : "deposited_wrong_receptacle");
        } else {
            if (obj.attempts >= cfg.max_attempts_per_object) {
                obj.retired = true;
                out.note = "primitive failed";
            }
            finish("put_away", "dropped");
        }
    }
    check_invariants(world, total);
    log.correct = static_cast<std::size_t>(
        std::count_if(log.objects.begin(), log.objects.end(), [](const ObjectOutcome& o) { return o.correct; }));
    return log;
}

SweepResult run_sweep(const std::vector<World>& worlds, const std::vector<Rules>& rules, const SimConfig& cfg,
                      std::size_t seeds, std::size_t workers) {
    if (worlds.empty()) throw ConfigError("sweep needs at least one world");
    if (rules.size() != worlds.size()) throw ConfigError("sweep needs one rule set per world");
    if (seeds == 0) throw ConfigError("sweep needs at least one seed");
    if (workers == 0) throw ConfigError("worker count must be positive");
    cfg.validate();
    for (std::size_t w = 0; w < worlds.size(); ++w) rules[w].validate(worlds[w]);

    const std::size_t n = seeds * worlds.size();
    std::vector<EpisodeLog> logs(n);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                SimConfig c = cfg;
                c.rng_seed = cfg.rng_seed + i;
                logs[i] = run_episode(worlds[i % worlds.size()], rules[i % worlds.size()], c);
            } catch (...) {
                std::lock_guard lock(failure_mu);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < std::min(workers, n); ++t) pool.emplace_back(work);
    }
    if (failure) std::rethrow_exception(failure);

    SweepResult r;
    r.episodes = n;
    r.base_seed = cfg.rng_seed;
    std::size_t total = 0, localized = 0, cls = 0, cls_ok = 0, exe = 0, exe_ok = 0;
    double sum = 0.0;
    for (const auto& l : logs) {
        r.overall.push_back(l.overall());
        sum += l.overall();
        total += l.objects.size();
        localized += l.localized;
        cls += l.classifications;
        cls_ok += l.classifications_correct;
        exe += l.executions;
        exe_ok += l.executions_succeeded;
        r.collisions += l.collisions;
        r.nav_failures += l.nav_failures;
    }
    r.mean_overall = sum / static_cast<double>(n);
    double ss = 0.0;
    for (double v : r.overall) ss += (v - r.mean_overall) * (v - r.mean_overall);
    r.stddev_overall = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    r.ci95_half_width = 1.96 * r.stddev_overall / std::sqrt(static_cast<double>(n));
    r.pooled_localize = ratio(localized, total);
    r.pooled_classify = ratio(cls_ok, cls);
    r.pooled_execute = ratio(exe_ok, exe);
    return r;
}

std::string SweepResult::to_json() const {
    ordered_json doc{{"episodes", episodes},
                     {"base_seed", base_seed},
                     {"mean_overall", mean_overall},
                     {"stddev_overall", stddev_overall},
                     {"ci95_half_width", ci95_half_width},
                     {"pooled_rates", {{"localize", pooled_localize}, {"classify", pooled_classify}, {"execute", pooled_execute}}},
                     {"collisions", collisions},
                     {"nav_failures", nav_failures},
                     {"overall", overall}};
    return doc.dump(2) + "\n";
}

std::string SweepResult::to_text() const {
    char buf[320];
    std::snprintf(buf, sizeof buf,
                  "%zu episodes from seed %llu\n"
                  "overall %.4f +/- %.4f (95%% CI), stddev %.4f\n"
                  "localize %.4f  classify %.4f  execute %.4f\n"
                  "collisions %zu  navigation failures %zu\n",
                  episodes, static_cast<unsigned long long>(base_seed), mean_overall, ci95_half_width, stddev_overall,
                  pooled_localize, pooled_classify, pooled_execute, collisions, nav_failures);
    return buf;
}

} // namespace tidybot::sim
