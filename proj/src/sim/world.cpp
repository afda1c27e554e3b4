#include "tidybot/sim/world.hpp"

#include <algorithm>
#include <limits>
#include <set>

#include <nlohmann/json.hpp>

#include "tidybot/core/dataset.hpp"

namespace tidybot::sim {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& path, const std::string& what) {
    throw ParseError(path + ": " + what, 0, path);
}

const json& field(const json& j, const char* key, const std::string& path) {
    if (!j.is_object()) bad(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) bad(path + "." + key, "missing field");
    return *it;
}

double number(const json& j, const std::string& path) {
    if (!j.is_number()) bad(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) bad(path, "expected a finite number");
    return v;
}

std::string text(const json& j, const std::string& path) {
    if (!j.is_string()) bad(path, "expected a string");
    return j.get<std::string>();
}

Vec2 point(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2) bad(path, "expected [x, y]");
    return {number(j[0], path + "[0]"), number(j[1], path + "[1]")};
}

template <typename N>
N name(const json& j, const std::string& path) {
    try {
        return N(text(j, path));
    } catch (const InvalidName& e) {
        bad(path, e.what());
    }
}

Primitive primitive(const json& j, const std::string& path) {
    auto p = parse_primitive(text(j, path));
    if (!p) bad(path, "expected \"place\" or \"toss\"");
    return *p;
}

json parse_json(std::string_view src, const char* what) {
    try {
        return json::parse(src);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string(what) + ": " + e.what(), 0, "");
    }
}

} // namespace

std::string_view to_string(ObjectState s) noexcept {
    switch (s) {
    case ObjectState::OnFloor: return "on_floor";
    case ObjectState::Grasped: return "grasped";
    case ObjectState::Deposited: return "deposited";
    }
    return "?";
}

std::optional<std::size_t> World::receptacle_index(const ReceptacleName& n) const {
    for (const auto& r : receptacles)
        if (r.name == n) return r.id;
    return std::nullopt;
}

std::vector<ReceptacleName> World::receptacle_names() const {
    std::vector<ReceptacleName> out;
    for (const auto& r : receptacles) out.push_back(r.name);
    return out;
}

std::vector<Rect> World::footprints() const {
    std::vector<Rect> out;
    for (const auto& r : receptacles) out.push_back(r.footprint);
    return out;
}

std::optional<std::size_t> World::grasped() const {
    for (const auto& o : objects)
        if (o.state == ObjectState::Grasped) return o.id;
    return std::nullopt;
}

std::size_t World::count(ObjectState s) const {
    return static_cast<std::size_t>(
        std::count_if(objects.begin(), objects.end(), [s](const WorldObject& o) { return o.state == s; }));
}

void World::validate() const {
    if (!(bounds.area() > 0.0)) throw ConfigError("world bounds must have positive area");
    if (!(resolution > 0.0)) throw ConfigError("world resolution must be positive");
    if (!bounds.contains(robot.position())) throw ConfigError("robot starts outside the map");
    std::set<ReceptacleName> rnames;
    for (std::size_t i = 0; i < receptacles.size(); ++i) {
        const auto& r = receptacles[i];
        if (r.id != i) throw ConfigError("receptacle ids must equal their index");
        if (!rnames.insert(r.name).second) throw ConfigError("duplicate receptacle '" + r.name.str() + "'");
        if (!(r.footprint.area() > 0.0)) throw ConfigError("receptacle '" + r.name.str() + "' has an empty footprint");
        if (!bounds.contains(r.footprint)) throw ConfigError("receptacle '" + r.name.str() + "' leaves the map");
        if (!r.footprint.contains(r.drop_point))
            throw ConfigError("drop point of '" + r.name.str() + "' lies outside its footprint");
    }
    std::set<ObjectName> onames;
    std::size_t grasped_count = 0;
    for (std::size_t i = 0; i < objects.size(); ++i) {
        const auto& o = objects[i];
        if (o.id != i) throw ConfigError("object ids must equal their index");
        if (!onames.insert(o.name).second) throw ConfigError("duplicate object '" + o.name.str() + "'");
        if (o.state == ObjectState::Grasped) ++grasped_count;
        if (o.state == ObjectState::Deposited && (!o.receptacle || *o.receptacle >= receptacles.size()))
            throw ConfigError("deposited object '" + o.name.str() + "' names no receptacle");
        if (o.state != ObjectState::Deposited && !bounds.contains(o.position))
            throw ConfigError("object '" + o.name.str() + "' lies outside the map");
        if (!preferences.count(o.category))
            throw ConfigError("object '" + o.name.str() + "' has category '" + o.category.str() +
                              "' with no preference");
    }
    if (grasped_count > 1) throw ConfigError("more than one object is grasped");
    for (const auto& [cat, rule] : preferences)
        if (!rnames.count(rule.receptacle))
            throw ConfigError("preference for '" + cat.str() + "' names unknown receptacle '" + rule.receptacle.str() +
                              "'");
}

World parse_world(std::string_view src) {
    const json j = parse_json(src, "world file");
    World w;
    if (auto it = j.find("name"); it != j.end()) w.name = text(*it, "name");
    const auto& b = field(j, "bounds", "world");
    w.bounds = {point(field(b, "min", "bounds"), "bounds.min"), point(field(b, "max", "bounds"), "bounds.max")};
    w.resolution = number(field(j, "resolution", "world"), "resolution");
    const auto& r = field(j, "robot", "world");
    w.robot = Pose2D::make(number(field(r, "x", "robot"), "robot.x"), number(field(r, "y", "robot"), "robot.y"),
                           r.contains("theta") ? number(r["theta"], "robot.theta") : 0.0);

    const auto& recs = field(j, "receptacles", "world");
    if (!recs.is_array()) bad("receptacles", "expected an array");
    for (std::size_t i = 0; i < recs.size(); ++i) {
        const auto p = "receptacles[" + std::to_string(i) + "]";
        const auto& rj = recs[i];
        Rect fp{point(field(rj, "min", p), p + ".min"), point(field(rj, "max", p), p + ".max")};
        Vec2 drop = rj.contains("drop_point") ? point(rj["drop_point"], p + ".drop_point")
                                              : Vec2{(fp.min.x + fp.max.x) / 2, (fp.min.y + fp.max.y) / 2};
        w.receptacles.push_back({i, name<ReceptacleName>(field(rj, "name", p), p + ".name"), fp, drop});
    }

    const auto& objs = field(j, "objects", "world");
    if (!objs.is_array()) bad("objects", "expected an array");
    for (std::size_t i = 0; i < objs.size(); ++i) {
        const auto p = "objects[" + std::to_string(i) + "]";
        const auto& oj = objs[i];
        w.objects.push_back({i, name<ObjectName>(field(oj, "name", p), p + ".name"),
                             name<ObjectName>(field(oj, "category", p), p + ".category"),
                             point(field(oj, "position", p), p + ".position"), ObjectState::OnFloor, std::nullopt,
                             false, false, 0});
    }

    const auto& prefs = field(j, "preferences", "world");
    if (!prefs.is_object()) bad("preferences", "expected an object");
    for (const auto& [cat, rule] : prefs.items()) {
        const auto p = "preferences." + cat;
        ObjectName c = name<ObjectName>(json(cat), p);
        w.preferences.emplace(std::move(c), CategoryRule{name<ReceptacleName>(field(rule, "receptacle", p), p + ".receptacle"),
                                                         primitive(field(rule, "primitive", p), p + ".primitive")});
    }

    if (auto it = j.find("examples"); it != j.end()) {
        if (auto rj = it->find("receptacle"); rj != it->end()) {
            for (std::size_t i = 0; i < rj->size(); ++i) {
                const auto p = "examples.receptacle[" + std::to_string(i) + "]";
                w.receptacle_examples.push_back({name<ObjectName>(field((*rj)[i], "object", p), p + ".object"),
                                                 name<ReceptacleName>(field((*rj)[i], "receptacle", p), p + ".receptacle")});
            }
        }
        if (auto pj = it->find("primitive"); pj != it->end()) {
            for (std::size_t i = 0; i < pj->size(); ++i) {
                const auto p = "examples.primitive[" + std::to_string(i) + "]";
                w.primitive_examples.push_back({name<ObjectName>(field((*pj)[i], "object", p), p + ".object"),
                                                primitive(field((*pj)[i], "primitive", p), p + ".primitive")});
            }
        }
    }
    w.validate();
    return w;
}

World load_world(const std::filesystem::path& path) {
    try {
        return parse_world(read_file(path));
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what(), e.line(), e.field());
    }
}

void SimConfig::validate() const {
    for (auto [v, n] : {std::pair{p_localize, "p_localize"}, {p_classify, "p_classify"}, {p_place, "p_place"},
                        {p_toss, "p_toss"}})
        if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string(n) + " must lie in [0, 1]");
    if (!(lookahead > 0.0)) throw ConfigError("lookahead must be positive");
    if (!(speed > 0.0)) throw ConfigError("speed must be positive");
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (!(inflation >= 0.0)) throw ConfigError("inflation must be non-negative");
    if (max_steps == 0) throw ConfigError("max_steps must be positive");
    if (max_attempts_per_object == 0) throw ConfigError("max_attempts_per_object must be positive");
    if (!(grasp_reach > 0.0) || !(place_reach > 0.0) || !(toss_reach > 0.0))
        throw ConfigError("reach distances must be positive");
}

SimConfig parse_sim_config(std::string_view src) {
    const json j = parse_json(src, "sim config");
    if (!j.is_object()) bad("config", "expected an object");
    SimConfig c;
    for (const auto& [key, v] : j.items()) {
        auto count = [&](const char* what) {
            if (!v.is_number_unsigned()) bad(key, std::string("expected a non-negative integer ") + what);
            return v.get<std::uint64_t>();
        };
        if (key == "p_localize") c.p_localize = number(v, key);
        else if (key == "p_classify") c.p_classify = number(v, key);
        else if (key == "p_place") c.p_place = number(v, key);
        else if (key == "p_toss") c.p_toss = number(v, key);
        else if (key == "lookahead") c.lookahead = number(v, key);
        else if (key == "speed") c.speed = number(v, key);
        else if (key == "dt") c.dt = number(v, key);
        else if (key == "inflation") c.inflation = number(v, key);
        else if (key == "max_steps") c.max_steps = count("step limit");
        else if (key == "rng_seed") c.rng_seed = count("seed");
        else if (key == "max_attempts_per_object") c.max_attempts_per_object = count("attempt limit");
        else if (key == "grasp_reach") c.grasp_reach = number(v, key);
        else if (key == "place_reach") c.place_reach = number(v, key);
        else if (key == "toss_reach") c.toss_reach = number(v, key);
        else bad(key, "unknown config field");
    }
    c.validate();
    return c;
}

SimConfig load_sim_config(const std::filesystem::path& path) {
    try {
        return parse_sim_config(read_file(path));
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what(), e.line(), e.field());
    }
}

std::optional<std::size_t> closest_object(const World& world, const Pose2D& pose) {
    std::optional<std::size_t> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& o : world.objects) {
        if (o.state != ObjectState::OnFloor || !o.detected || o.retired) continue;
        const double d = distance(o.position, pose.position());
        if (d < best_d) {
            best_d = d;
            best = o.id;
        }
    }
    return best;
}

ObjectName simulate_classify(const WorldObject& obj, const std::vector<ObjectName>& categories, double p_classify,
                             CounterRng& rng) {
    auto it = std::find(categories.begin(), categories.end(), obj.category);
    if (it == categories.end())
        throw UnknownCategory("category '" + obj.category.str() + "' of '" + obj.name.str() +
                              "' is not among the extracted categories");
    if (categories.size() == 1 || rng.bernoulli(p_classify)) return obj.category;
    const auto truth = static_cast<std::size_t>(it - categories.begin());
    auto k = static_cast<std::size_t>(rng.uniform_index(static_cast<std::uint32_t>(categories.size() - 1)));
    if (k >= truth) ++k;
    return categories[k];
}

bool execute_primitive(World& world, Primitive primitive, std::size_t receptacle, double p_place, double p_toss,
                       CounterRng& rng) {
    const auto g = world.grasped();
    if (!g) throw NothingGrasped("no object is grasped");
    if (receptacle >= world.receptacles.size()) throw InvalidArgument("unknown receptacle index");
    auto& obj = world.objects[*g];
    const bool ok = rng.bernoulli(primitive == Primitive::Place ? p_place : p_toss);
    if (ok) {
        obj.state = ObjectState::Deposited;
        obj.receptacle = receptacle;
        return true;
    }
    const auto& fp = world.receptacles[receptacle].footprint;
    const Vec2 robot = world.robot.position();
    const Vec2 edge = fp.clamp(robot);
    Vec2 dir = robot - edge;
    const double len = norm(dir);
    dir = len > 0.0 ? (1.0 / len) * dir : Vec2{0.0, -1.0};
    const double margin = world.resolution;
    obj.position = Rect{world.bounds.min, world.bounds.max}.clamp(edge + margin * dir);
    obj.state = ObjectState::OnFloor;
    obj.detected = true;
    return false;
}

} // namespace tidybot::sim
