#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "tidybot/core/types.hpp"

namespace tidybot {

/// Invariant identifiers reported by the validator.
namespace invariant {
inline constexpr std::string_view kReceptacleCount = "receptacle_count";       // 2..5 receptacles
inline constexpr std::string_view kSeenCount = "seen_count";                   // 4..10 seen
inline constexpr std::string_view kSplitBalance = "split_balance";             // |seen| == |unseen|
inline constexpr std::string_view kPerReceptacle = "two_per_receptacle";       // 2 seen + 2 unseen each
inline constexpr std::string_view kUnknownReceptacle = "receptacle_membership";
inline constexpr std::string_view kDisjointSplits = "seen_unseen_disjoint";
inline constexpr std::string_view kDuplicateObject = "unique_objects";
inline constexpr std::string_view kDuplicateReceptacle = "unique_receptacles";
inline constexpr std::string_view kPrimitiveCoverage = "primitive_coverage";
inline constexpr std::string_view kCriteriaPresent = "criteria_present";
inline constexpr std::string_view kUniqueScenarioId = "unique_scenario_id";
inline constexpr std::string_view kRoomTypeCount = "room_type_count";           // warning only
} // namespace invariant

struct Finding {
    std::string scenario_id;
    std::string invariant;
    std::string message;

    friend bool operator==(const Finding&, const Finding&) = default;
};

struct DatasetStats {
    std::size_t scenarios = 0;
    std::size_t seen_placements = 0;
    std::size_t unseen_placements = 0;
    std::size_t unique_receptacles = 0;
    std::size_t unique_objects = 0;
    std::map<RoomType, std::size_t> per_room_type;
    std::map<SortingCriterion, std::size_t> per_criterion;
};

struct ValidationReport {
    std::vector<Finding> errors;
    std::vector<Finding> warnings;
    DatasetStats stats;

    /// True iff no invariant is violated. Warnings do not count.
    [[nodiscard]] bool ok() const noexcept { return errors.empty(); }
    [[nodiscard]] std::string to_text() const;
};

/// Full-scale benchmark layout: scenarios per room type.
inline constexpr std::size_t kScenariosPerRoomType = 24;

/// Parses the dataset JSON text without checking scenario invariants.
/// Throws ParseError with a line number and a field path.
Dataset parse_dataset(std::string_view text, std::string_view source = "<memory>");

/// Reads, parses, and validates. Throws ParseError or ValidationError (the
/// latter naming the first violated invariant and its scenario).
Dataset load_dataset(const std::filesystem::path& path);

ValidationReport validate_dataset(const Dataset& ds);

/// Per-criterion scenario counts (a scenario counts for every tag it has).
std::map<SortingCriterion, std::size_t> tally_criteria(const Dataset& ds);

/// Canonical serialization; `parse_dataset(serialize_dataset(ds)) == ds`.
std::string serialize_dataset(const Dataset& ds);

/// Reads a whole file as bytes. Throws ConfigError when unreadable.
std::string read_file(const std::filesystem::path& path);

/// Writes through a temporary sibling and renames over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

} // namespace tidybot
