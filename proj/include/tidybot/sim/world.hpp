#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tidybot/core/types.hpp"
#include "tidybot/sim/nav.hpp"
#include "tidybot/sim/rng.hpp"

namespace tidybot::sim {

enum class ObjectState { OnFloor, Grasped, Deposited };
std::string_view to_string(ObjectState s) noexcept;

struct WorldObject {
    std::size_t id = 0;
    ObjectName name;
    ObjectName category;  // ground truth
    Vec2 position;        // meaningless once Deposited
    ObjectState state = ObjectState::OnFloor;
    std::optional<std::size_t> receptacle;  // set when Deposited
    bool detected = false;
    /// Set when the robot gives up on the object (unreachable, or out of
    /// primitive attempts); closest_object skips retired objects.
    bool retired = false;
    std::size_t attempts = 0;
};

struct ReceptacleBody {
    std::size_t id = 0;
    ReceptacleName name;
    Rect footprint;
    Vec2 drop_point;
};

/// The user's actual preference for a category.
struct CategoryRule {
    ReceptacleName receptacle;
    Primitive primitive = Primitive::Place;
    friend bool operator==(const CategoryRule&, const CategoryRule&) = default;
};

struct World {
    std::string name;
    Rect bounds;
    double resolution = 0.05;
    Pose2D robot;
    std::vector<WorldObject> objects;
    std::vector<ReceptacleBody> receptacles;
    std::map<ObjectName, CategoryRule> preferences;
    /// Seen examples for deriving rules through the LLM pipeline.
    std::vector<Placement> receptacle_examples;
    std::vector<PrimitiveChoice> primitive_examples;

    [[nodiscard]] std::optional<std::size_t> receptacle_index(const ReceptacleName& name) const;
    [[nodiscard]] std::vector<ReceptacleName> receptacle_names() const;
    [[nodiscard]] std::vector<Rect> footprints() const;
    [[nodiscard]] std::optional<std::size_t> grasped() const;
    [[nodiscard]] std::size_t count(ObjectState s) const;

    /// Throws ConfigError naming the first broken invariant.
    void validate() const;
};

World parse_world(std::string_view json_text);
/// Throws ConfigError (unreadable) or ParseError.
World load_world(const std::filesystem::path& path);

struct SimConfig {
    double p_localize = 1.0;
    double p_classify = 1.0;
    double p_place = 1.0;
    double p_toss = 1.0;
    double lookahead = 0.3;
    double speed = 0.5;
    double dt = 0.05;
    double inflation = 0.15;
    std::size_t max_steps = 1000;
    std::uint64_t rng_seed = 0;
    std::size_t max_attempts_per_object = 1;
    double grasp_reach = 0.5;
    double place_reach = 0.5;
    double toss_reach = 1.5;

    /// Throws ConfigError.
    void validate() const;
};

SimConfig parse_sim_config(std::string_view json_text);
SimConfig load_sim_config(const std::filesystem::path& path);

/// Nearest detected, non-retired floor object; ties go to the lower id.
std::optional<std::size_t> closest_object(const World& world, const Pose2D& pose);

/// Ground truth with probability p_classify, else a uniform draw over the
/// other categories. Throws UnknownCategory.
ObjectName simulate_classify(const WorldObject& obj, const std::vector<ObjectName>& categories, double p_classify,
                             CounterRng& rng);

/// Deposits the grasped object with probability p_place / p_toss. On failure
/// the object lands on the floor just outside the footprint edge facing the
/// robot. Throws NothingGrasped.
bool execute_primitive(World& world, Primitive primitive, std::size_t receptacle, double p_place, double p_toss,
                       CounterRng& rng);

} // namespace tidybot::sim
