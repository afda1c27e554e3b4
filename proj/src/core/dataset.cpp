#include "tidybot/core/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace tidybot {

using nlohmann::json;

namespace {

std::size_t line_of_offset(std::string_view text, std::size_t offset) {
    offset = std::min(offset, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

[[noreturn]] void field_error(const std::string& field, const std::string& what) {
    throw ParseError(field + ": " + what, 0, field);
}

const json& require(const json& obj, const char* key, const std::string& path) {
    if (!obj.is_object()) field_error(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) field_error(path + "." + key, "missing field");
    return *it;
}

std::string require_string(const json& v, const std::string& path) {
    if (!v.is_string()) field_error(path, "expected a string");
    return v.get<std::string>();
}

template <typename NameT>
NameT require_name(const json& v, const std::string& path) {
    auto s = require_string(v, path);
    try {
        return NameT(std::move(s));
    } catch (const InvalidName& e) {
        field_error(path, e.what());
    }
}

const json& require_array(const json& v, const std::string& path) {
    if (!v.is_array()) field_error(path, "expected an array");
    return v;
}

struct SplitEntries {
    std::vector<Placement> placements;
    std::optional<std::vector<PrimitiveChoice>> primitives;
};

SplitEntries parse_split(const json& arr, const std::string& path) {
    SplitEntries out;
    std::vector<PrimitiveChoice> prims;
    bool any_primitive = false;
    for (std::size_t i = 0; i < require_array(arr, path).size(); ++i) {
        const auto p = path + "[" + std::to_string(i) + "]";
        const auto& e = arr[i];
        auto object = require_name<ObjectName>(require(e, "object", p), p + ".object");
        auto receptacle = require_name<ReceptacleName>(require(e, "receptacle", p), p + ".receptacle");
        if (auto it = e.find("primitive"); it != e.end()) {
            auto text = require_string(*it, p + ".primitive");
            auto prim = parse_primitive(text);
            if (!prim) field_error(p + ".primitive", "unknown primitive '" + text + "'");
            prims.push_back({object, *prim});
            any_primitive = true;
        }
        out.placements.push_back({std::move(object), std::move(receptacle)});
    }
    if (any_primitive) out.primitives = std::move(prims);
    return out;
}

Scenario parse_scenario(const json& s, const std::string& path) {
    Scenario sc;
    sc.id = require_string(require(s, "id", path), path + ".id");
    if (sc.id.empty()) field_error(path + ".id", "empty scenario id");
    auto room = require_string(require(s, "room_type", path), path + ".room_type");
    auto rt = parse_room_type(room);
    if (!rt) field_error(path + ".room_type", "unknown room type '" + room + "'");
    sc.room_type = *rt;

    const auto& recs = require_array(require(s, "receptacles", path), path + ".receptacles");
    for (std::size_t i = 0; i < recs.size(); ++i)
        sc.receptacles.push_back(
            require_name<ReceptacleName>(recs[i], path + ".receptacles[" + std::to_string(i) + "]"));

    auto seen = parse_split(require(s, "seen", path), path + ".seen");
    auto unseen = parse_split(require(s, "unseen", path), path + ".unseen");
    sc.seen = std::move(seen.placements);
    sc.seen_primitives = std::move(seen.primitives);
    sc.unseen = std::move(unseen.placements);
    sc.unseen_primitives = std::move(unseen.primitives);

    const auto& crit = require_array(require(s, "criteria", path), path + ".criteria");
    for (std::size_t i = 0; i < crit.size(); ++i) {
        const auto p = path + ".criteria[" + std::to_string(i) + "]";
        auto text = require_string(crit[i], p);
        auto c = parse_criterion(text);
        if (!c) field_error(p, "unknown criterion '" + text + "'");
        sc.criteria.insert(*c);
    }
    return sc;
}

json split_to_json(const std::vector<Placement>& placements,
                   const std::optional<std::vector<PrimitiveChoice>>& prims) {
    json arr = json::array();
    for (const auto& p : placements) {
        json e = json::object();
        e["object"] = p.object.str();
        e["receptacle"] = p.receptacle.str();
        if (prims) {
            auto it = std::find_if(prims->begin(), prims->end(),
                                   [&](const PrimitiveChoice& c) { return c.object == p.object; });
            if (it != prims->end()) e["primitive"] = std::string(to_string(it->primitive));
        }
        arr.push_back(std::move(e));
    }
    return arr;
}

void check_primitives(const Scenario& sc, const std::vector<Placement>& split,
                      const std::optional<std::vector<PrimitiveChoice>>& prims, std::string_view split_name,
                      std::vector<Finding>& errors) {
    if (!prims) return;
    std::multiset<ObjectName> want, have;
    for (const auto& p : split) want.insert(p.object);
    for (const auto& c : *prims) have.insert(c.object);
    if (want != have)
        errors.push_back({sc.id, std::string(invariant::kPrimitiveCoverage),
                          std::string(split_name) + " primitives must cover exactly the " +
                              std::string(split_name) + " objects, one choice each"});
}

} // namespace

Dataset parse_dataset(std::string_view text, std::string_view source) {
    json root;
    try {
        root = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        const auto line = line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1);
        throw ParseError(std::string(source) + ":" + std::to_string(line) + ": malformed JSON: " + e.what(),
                         line, "");
    }
    Dataset ds;
    const auto& scenarios = require_array(require(root, "scenarios", ""), "scenarios");
    for (std::size_t i = 0; i < scenarios.size(); ++i)
        ds.scenarios.push_back(parse_scenario(scenarios[i], "scenarios[" + std::to_string(i) + "]"));
    return ds;
}

ValidationReport validate_dataset(const Dataset& ds) {
    ValidationReport report;
    auto& errors = report.errors;
    auto& st = report.stats;
    std::set<std::string> ids, all_receptacles, all_objects;

    for (const auto& sc : ds.scenarios) {
        auto fail = [&](std::string_view inv, std::string msg) {
            errors.push_back({sc.id, std::string(inv), std::move(msg)});
        };
        if (!ids.insert(sc.id).second) fail(invariant::kUniqueScenarioId, "duplicate scenario id");

        const auto nr = sc.receptacles.size();
        if (nr < 2 || nr > 5)
            fail(invariant::kReceptacleCount, "expected 2-5 receptacles, found " + std::to_string(nr));
        std::set<ReceptacleName> recs(sc.receptacles.begin(), sc.receptacles.end());
        if (recs.size() != nr) fail(invariant::kDuplicateReceptacle, "receptacle listed more than once");

        if (sc.seen.size() < 4 || sc.seen.size() > 10)
            fail(invariant::kSeenCount, "expected 4-10 seen placements, found " + std::to_string(sc.seen.size()));
        if (sc.seen.size() != sc.unseen.size())
            fail(invariant::kSplitBalance, "seen has " + std::to_string(sc.seen.size()) + " placements but unseen has " +
                                               std::to_string(sc.unseen.size()));

        for (auto [split, name] : {std::pair{&sc.seen, "seen"}, std::pair{&sc.unseen, "unseen"}}) {
            std::map<ReceptacleName, std::size_t> counts;
            for (const auto& p : *split) {
                if (!recs.contains(p.receptacle))
                    fail(invariant::kUnknownReceptacle, std::string(name) + " placement '" + p.object.str() +
                                                            "' uses receptacle '" + p.receptacle.str() +
                                                            "' which is not in the receptacle list");
                ++counts[p.receptacle];
            }
            for (const auto& r : recs) {
                const auto n = counts.count(r) ? counts[r] : 0;
                if (n != 2)
                    fail(invariant::kPerReceptacle, "receptacle '" + r.str() + "' has " + std::to_string(n) + " " +
                                                        name + " placements; each receptacle needs exactly 2");
            }
        }

        std::set<ObjectName> seen_set, unseen_set;
        for (const auto& p : sc.seen)
            if (!seen_set.insert(p.object).second)
                fail(invariant::kDuplicateObject, "object '" + p.object.str() + "' appears twice in seen");
        for (const auto& p : sc.unseen) {
            if (!unseen_set.insert(p.object).second)
                fail(invariant::kDuplicateObject, "object '" + p.object.str() + "' appears twice in unseen");
            if (seen_set.contains(p.object))
                fail(invariant::kDisjointSplits, "object '" + p.object.str() + "' appears in both seen and unseen");
        }

        check_primitives(sc, sc.seen, sc.seen_primitives, "seen", errors);
        check_primitives(sc, sc.unseen, sc.unseen_primitives, "unseen", errors);
        if (sc.seen_primitives.has_value() != sc.unseen_primitives.has_value())
            fail(invariant::kPrimitiveCoverage, "primitive annotations must be present on both splits or neither");

        if (sc.criteria.empty()) fail(invariant::kCriteriaPresent, "scenario has no sorting criteria");

        ++st.scenarios;
        st.seen_placements += sc.seen.size();
        st.unseen_placements += sc.unseen.size();
        ++st.per_room_type[sc.room_type];
        for (auto c : sc.criteria) ++st.per_criterion[c];
        for (const auto& r : sc.receptacles) all_receptacles.insert(r.str());
        for (const auto& p : sc.seen) all_objects.insert(p.object.str());
        for (const auto& p : sc.unseen) all_objects.insert(p.object.str());
    }
    st.unique_receptacles = all_receptacles.size();
    st.unique_objects = all_objects.size();

    for (auto rt : kAllRoomTypes) {
        const auto n = st.per_room_type.count(rt) ? st.per_room_type.at(rt) : 0;
        if (n != kScenariosPerRoomType)
            report.warnings.push_back({"", std::string(invariant::kRoomTypeCount),
                                       std::string(to_string(rt)) + " has " + std::to_string(n) +
                                           " scenarios (full benchmark has " +
                                           std::to_string(kScenariosPerRoomType) + ")"});
    }
    return report;
}

std::string ValidationReport::to_text() const {
    std::ostringstream os;
    for (const auto& f : errors) os << "error [" << f.scenario_id << "] " << f.invariant << ": " << f.message << "\n";
    for (const auto& f : warnings)
        os << "warning " << (f.scenario_id.empty() ? "" : "[" + f.scenario_id + "] ") << f.invariant << ": "
           << f.message << "\n";
    os << "scenarios: " << stats.scenarios << "\n"
       << "seen placements: " << stats.seen_placements << "\n"
       << "unseen placements: " << stats.unseen_placements << "\n"
       << "unique receptacles: " << stats.unique_receptacles << "\n"
       << "unique objects: " << stats.unique_objects << "\n";
    for (auto rt : kAllRoomTypes)
        os << "room " << to_string(rt) << ": " << (stats.per_room_type.count(rt) ? stats.per_room_type.at(rt) : 0)
           << "\n";
    for (auto c : kAllCriteria)
        os << "criterion " << to_string(c) << ": "
           << (stats.per_criterion.count(c) ? stats.per_criterion.at(c) : 0) << "/" << stats.scenarios << "\n";
    os << (ok() ? "valid" : "INVALID (" + std::to_string(errors.size()) + " findings)") << "\n";
    return os.str();
}

Dataset load_dataset(const std::filesystem::path& path) {
    auto text = read_file(path);
    auto ds = parse_dataset(text, path.string());
    auto report = validate_dataset(ds);
    if (!report.ok()) {
        const auto& f = report.errors.front();
        throw ValidationError("scenario '" + f.scenario_id + "' violates " + f.invariant + ": " + f.message +
                              (report.errors.size() > 1
                                   ? " (+" + std::to_string(report.errors.size() - 1) + " more)"
                                   : ""));
    }
    return ds;
}

std::map<SortingCriterion, std::size_t> tally_criteria(const Dataset& ds) {
    std::map<SortingCriterion, std::size_t> out;
    for (auto c : kAllCriteria) out[c] = 0;
    for (const auto& sc : ds.scenarios)
        for (auto c : sc.criteria) ++out[c];
    return out;
}

std::string serialize_dataset(const Dataset& ds) {
    nlohmann::ordered_json root;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& sc : ds.scenarios) {
        nlohmann::ordered_json s;
        s["id"] = sc.id;
        s["room_type"] = std::string(to_string(sc.room_type));
        auto recs = nlohmann::ordered_json::array();
        for (const auto& r : sc.receptacles) recs.push_back(r.str());
        s["receptacles"] = std::move(recs);
        s["seen"] = split_to_json(sc.seen, sc.seen_primitives);
        s["unseen"] = split_to_json(sc.unseen, sc.unseen_primitives);
        auto crit = nlohmann::ordered_json::array();
        for (auto c : sc.criteria) crit.push_back(std::string(to_string(c)));
        s["criteria"] = std::move(crit);
        arr.push_back(std::move(s));
    }
    root["scenarios"] = std::move(arr);
    return root.dump(2) + "\n";
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write file: " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw ConfigError("short write: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw ConfigError("cannot rename " + tmp.string() + " -> " + path.string() + ": " + ec.message());
}

} // namespace tidybot
