#pragma once

#include <compare>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "tidybot/core/errors.hpp"

namespace tidybot {

/// Throws InvalidName unless `text` is nonempty, trimmed, and free of double
/// quotes and line breaks. Names are embedded verbatim in DSL string literals.
void check_name(std::string_view text, std::string_view what);

/// A validated, immutable name. The tag keeps object and receptacle names
/// from being mixed up.
template <typename Tag>
class Name {
public:
    explicit Name(std::string text) : text_(std::move(text)) { check_name(text_, Tag::kind); }

    [[nodiscard]] const std::string& str() const noexcept { return text_; }

    friend bool operator==(const Name&, const Name&) = default;
    friend auto operator<=>(const Name&, const Name&) = default;

private:
    std::string text_;
};

struct ObjectTag {
    static constexpr std::string_view kind = "object name";
};
struct ReceptacleTag {
    static constexpr std::string_view kind = "receptacle name";
};

using ObjectName = Name<ObjectTag>;
using ReceptacleName = Name<ReceptacleTag>;

enum class Primitive { Place, Toss };

enum class SortingCriterion { Category, Attribute, Function, Subcategory, MultipleCategories };

enum class RoomType { LivingRoom, Bedroom, Kitchen, PantryRoom };

inline constexpr SortingCriterion kAllCriteria[] = {
    SortingCriterion::Category, SortingCriterion::Attribute, SortingCriterion::Function,
    SortingCriterion::Subcategory, SortingCriterion::MultipleCategories};

inline constexpr RoomType kAllRoomTypes[] = {RoomType::LivingRoom, RoomType::Bedroom,
                                             RoomType::Kitchen, RoomType::PantryRoom};

// Wire spellings used by dataset files and reports.
std::string_view to_string(Primitive p) noexcept;
std::string_view to_string(SortingCriterion c) noexcept;
std::string_view to_string(RoomType r) noexcept;
std::optional<Primitive> parse_primitive(std::string_view s) noexcept;
std::optional<SortingCriterion> parse_criterion(std::string_view s) noexcept;
std::optional<RoomType> parse_room_type(std::string_view s) noexcept;

struct Placement {
    ObjectName object;
    ReceptacleName receptacle;

    friend bool operator==(const Placement&, const Placement&) = default;
};

struct PrimitiveChoice {
    ObjectName object;
    Primitive primitive;

    friend bool operator==(const PrimitiveChoice&, const PrimitiveChoice&) = default;
};

/// One benchmark unit: a few user examples (seen) and held-out placements
/// (unseen) over a shared receptacle list.
struct Scenario {
    std::string id;
    RoomType room_type = RoomType::LivingRoom;
    std::vector<ReceptacleName> receptacles;
    std::vector<Placement> seen;
    std::vector<Placement> unseen;
    std::optional<std::vector<PrimitiveChoice>> seen_primitives;
    std::optional<std::vector<PrimitiveChoice>> unseen_primitives;
    std::set<SortingCriterion> criteria;

    [[nodiscard]] std::vector<ObjectName> seen_objects() const;
    [[nodiscard]] std::vector<ObjectName> unseen_objects() const;
    [[nodiscard]] bool has_primitives() const noexcept {
        return seen_primitives.has_value() && unseen_primitives.has_value();
    }

    friend bool operator==(const Scenario&, const Scenario&) = default;
};

struct Dataset {
    std::vector<Scenario> scenarios;

    [[nodiscard]] const Scenario* find(std::string_view id) const noexcept;
    friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Trim, whitespace-run collapse and ASCII case fold. Used only when matching LLM output against stored
/// names; stored data is never normalized.
std::string normalize_for_match(std::string_view s);

std::string_view trim(std::string_view s) noexcept;

} // namespace tidybot
