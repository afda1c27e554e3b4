#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace tidybot::sim {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) noexcept { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) noexcept { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double k, Vec2 a) noexcept { return {k * a.x, k * a.y}; }
    friend bool operator==(Vec2, Vec2) = default;
};

inline double dot(Vec2 a, Vec2 b) noexcept { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) noexcept { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) noexcept { return norm(a - b); }

/// Wraps an angle into (-pi, pi].
double normalize_angle(double a);

struct Pose2D {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;

    /// Normalizes theta. Throws InvalidArgument on a non-finite component.
    static Pose2D make(double x, double y, double theta);
    [[nodiscard]] Vec2 position() const noexcept { return {x, y}; }
    friend bool operator==(const Pose2D&, const Pose2D&) = default;
};

/// Axis-aligned rectangle.
struct Rect {
    Vec2 min;
    Vec2 max;

    [[nodiscard]] double width() const noexcept { return max.x - min.x; }
    [[nodiscard]] double height() const noexcept { return max.y - min.y; }
    [[nodiscard]] double area() const noexcept { return width() * height(); }
    [[nodiscard]] bool contains(Vec2 p) const noexcept {
        return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y;
    }
    [[nodiscard]] bool contains(const Rect& r) const noexcept { return contains(r.min) && contains(r.max); }
    [[nodiscard]] Rect inflated(double m) const noexcept { return {{min.x - m, min.y - m}, {max.x + m, max.y + m}}; }
    /// Closest point of the rectangle to `p`.
    [[nodiscard]] Vec2 clamp(Vec2 p) const noexcept;
    friend bool operator==(const Rect&, const Rect&) = default;
};

struct Cell {
    int ix = 0;
    int iy = 0;
    friend bool operator==(Cell, Cell) = default;
    friend auto operator<=>(Cell, Cell) = default;
};

class OccupancyGrid {
public:
    /// All-free grid covering `bounds`. Throws InvalidArgument when the
    /// resolution is not positive or the bounds are empty.
    OccupancyGrid(const Rect& bounds, double resolution);

    [[nodiscard]] double resolution() const noexcept { return resolution_; }
    [[nodiscard]] int width() const noexcept { return width_; }
    [[nodiscard]] int height() const noexcept { return height_; }
    [[nodiscard]] const Rect& bounds() const noexcept { return bounds_; }

    [[nodiscard]] bool in_bounds(Cell c) const noexcept { return c.ix >= 0 && c.iy >= 0 && c.ix < width_ && c.iy < height_; }
    /// Cells outside the grid count as occupied.
    [[nodiscard]] bool occupied(Cell c) const noexcept;
    void set_occupied(Cell c, bool value);
    [[nodiscard]] std::size_t occupied_count() const noexcept;

    /// Cell containing `p`. Throws OutOfBounds.
    [[nodiscard]] Cell cell_of(Vec2 p) const;
    [[nodiscard]] Vec2 center_of(Cell c) const noexcept;

private:
    Rect bounds_;
    double resolution_;
    int width_;
    int height_;
    std::vector<std::uint8_t> cells_;
};

/// Marks every cell that overlaps an inflated footprint with positive area.
/// Throws OutOfBounds when a footprint leaves the bounds.
OccupancyGrid build_occupancy_grid(std::span<const Rect> footprints, const Rect& bounds, double resolution,
                                   double inflation);

struct PlannedPath {
    std::vector<Cell> cells;
    std::vector<Vec2> waypoints;  // cell centers
    std::size_t orthogonal_steps = 0;
    std::size_t diagonal_steps = 0;

    /// Length in meters.
    [[nodiscard]] double cost(double resolution) const noexcept {
        return resolution * (static_cast<double>(orthogonal_steps) + std::sqrt(2.0) * static_cast<double>(diagonal_steps));
    }
};

/// 8-connected A* (diagonal cost sqrt 2, octile heuristic). Diagonal moves
/// need both adjacent orthogonal cells free. Throws BlockedEndpoint, NoPath
/// or OutOfBounds.
PlannedPath plan_path(const OccupancyGrid& grid, Vec2 start, Vec2 goal);
PlannedPath plan_path(const OccupancyGrid& grid, Cell start, Cell goal);

/// Lookahead target: the final waypoint if it lies within `lookahead`, else
/// the farthest-along intersection of the lookahead circle with the path,
/// else the nearest path point. Throws EmptyPath.
Vec2 lookahead_point(const Pose2D& pose, std::span<const Vec2> path, double lookahead);

/// 2 y / d^2 for the target expressed in the robot frame, where d is its
/// distance (equal to the lookahead on circle intersections).
double pure_pursuit_curvature(const Pose2D& pose, Vec2 target);

/// Exact unicycle integration over `dt` at constant speed and curvature.
Pose2D integrate_arc(const Pose2D& pose, double speed, double curvature, double dt);

/// One controller step. Throws EmptyPath, InvalidArgument.
Pose2D pure_pursuit_step(const Pose2D& pose, std::span<const Vec2> path, double lookahead, double speed, double dt);

} // namespace tidybot::sim
