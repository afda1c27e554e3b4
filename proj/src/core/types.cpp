#include "tidybot/core/types.hpp"

#include <algorithm>
#include <cctype>

namespace tidybot {

std::string_view trim(std::string_view s) noexcept {
    constexpr std::string_view ws = " \t\r\n\v\f";
    const auto first = s.find_first_not_of(ws);
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(ws);
    return s.substr(first, last - first + 1);
}

void check_name(std::string_view text, std::string_view what) {
    if (text.empty()) throw InvalidName(std::string(what) + " is empty");
    if (text.find_first_of("\"\n\r") != std::string_view::npos)
        throw InvalidName(std::string(what) + " contains a quote or line break: " + std::string(text));
    if (trim(text).size() != text.size())
        throw InvalidName(std::string(what) + " has surrounding whitespace: '" + std::string(text) + "'");
}

std::string normalize_for_match(std::string_view s) {
    std::string out;
    bool gap = false;
    for (unsigned char c : trim(s)) {
        if (std::isspace(c)) {
            gap = true;
            continue;
        }
        if (gap) out.push_back(' ');
        gap = false;
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

std::string_view to_string(Primitive p) noexcept {
    return p == Primitive::Place ? "place" : "toss";
}

std::string_view to_string(SortingCriterion c) noexcept {
    switch (c) {
    case SortingCriterion::Category: return "category";
    case SortingCriterion::Attribute: return "attribute";
    case SortingCriterion::Function: return "function";
    case SortingCriterion::Subcategory: return "subcategory";
    case SortingCriterion::MultipleCategories: return "multiple_categories";
    }
    return "category";
}

std::string_view to_string(RoomType r) noexcept {
    switch (r) {
    case RoomType::LivingRoom: return "living_room";
    case RoomType::Bedroom: return "bedroom";
    case RoomType::Kitchen: return "kitchen";
    case RoomType::PantryRoom: return "pantry_room";
    }
    return "living_room";
}

std::optional<Primitive> parse_primitive(std::string_view s) noexcept {
    if (s == "place") return Primitive::Place;
    if (s == "toss") return Primitive::Toss;
    return std::nullopt;
}

std::optional<SortingCriterion> parse_criterion(std::string_view s) noexcept {
    for (auto c : kAllCriteria)
        if (to_string(c) == s) return c;
    return std::nullopt;
}

std::optional<RoomType> parse_room_type(std::string_view s) noexcept {
    for (auto r : kAllRoomTypes)
        if (to_string(r) == s) return r;
    return std::nullopt;
}

std::vector<ObjectName> Scenario::seen_objects() const {
    std::vector<ObjectName> out;
    out.reserve(seen.size());
    for (const auto& p : seen) out.push_back(p.object);
    return out;
}

std::vector<ObjectName> Scenario::unseen_objects() const {
    std::vector<ObjectName> out;
    out.reserve(unseen.size());
    for (const auto& p : unseen) out.push_back(p.object);
    return out;
}

const Scenario* Dataset::find(std::string_view id) const noexcept {
    for (const auto& s : scenarios)
        if (s.id == id) return &s;
    return nullptr;
}

} // namespace tidybot
