#include "tidybot/sim/nav.hpp"

#include <algorithm>
#include <limits>
#include <numbers>
#include <queue>
#include <string>

#include "tidybot/core/errors.hpp"

namespace tidybot::sim {

namespace {

constexpr double kSnap = 1e-9;

std::string fmt_point(Vec2 p) { return "(" + std::to_string(p.x) + ", " + std::to_string(p.y) + ")"; }

} // namespace

double normalize_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    a = std::fmod(a, two_pi);
    if (a <= -std::numbers::pi) a += two_pi;
    if (a > std::numbers::pi) a -= two_pi;
    return a;
}

Pose2D Pose2D::make(double x, double y, double theta) {
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(theta))
        throw InvalidArgument("pose components must be finite");
    return {x, y, normalize_angle(theta)};
}

Vec2 Rect::clamp(Vec2 p) const noexcept { return {std::clamp(p.x, min.x, max.x), std::clamp(p.y, min.y, max.y)}; }

OccupancyGrid::OccupancyGrid(const Rect& bounds, double resolution) : bounds_(bounds), resolution_(resolution) {
    if (!(resolution > 0.0) || !std::isfinite(resolution)) throw InvalidArgument("grid resolution must be positive");
    if (!(bounds.width() > 0.0) || !(bounds.height() > 0.0)) throw InvalidArgument("grid bounds must have positive area");
    width_ = static_cast<int>(std::ceil(bounds.width() / resolution - kSnap));
    height_ = static_cast<int>(std::ceil(bounds.height() / resolution - kSnap));
    cells_.assign(static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_), 0);
}

bool OccupancyGrid::occupied(Cell c) const noexcept {
    if (!in_bounds(c)) return true;
    return cells_[static_cast<std::size_t>(c.iy) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(c.ix)] != 0;
}

void OccupancyGrid::set_occupied(Cell c, bool value) {
    if (!in_bounds(c)) throw OutOfBounds("cell outside the grid");
    cells_[static_cast<std::size_t>(c.iy) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(c.ix)] =
        value ? 1 : 0;
}

std::size_t OccupancyGrid::occupied_count() const noexcept {
    return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), std::uint8_t{1}));
}

Cell OccupancyGrid::cell_of(Vec2 p) const {
    if (!bounds_.contains(p)) throw OutOfBounds("point " + fmt_point(p) + " is outside the map");
    const int ix = std::min(static_cast<int>(std::floor((p.x - bounds_.min.x) / resolution_)), width_ - 1);
    const int iy = std::min(static_cast<int>(std::floor((p.y - bounds_.min.y) / resolution_)), height_ - 1);
    return {ix, iy};
}

Vec2 OccupancyGrid::center_of(Cell c) const noexcept {
    return {bounds_.min.x + (c.ix + 0.5) * resolution_, bounds_.min.y + (c.iy + 0.5) * resolution_};
}

OccupancyGrid build_occupancy_grid(std::span<const Rect> footprints, const Rect& bounds, double resolution,
                                   double inflation) {
    if (!(inflation >= 0.0)) throw InvalidArgument("inflation must be non-negative");
    OccupancyGrid grid(bounds, resolution);
    for (const auto& fp : footprints) {
        if (!(fp.area() > 0.0)) throw InvalidArgument("footprint must have positive area");
        if (!bounds.contains(fp)) throw OutOfBounds("footprint " + fmt_point(fp.min) + "-" + fmt_point(fp.max) +
                                                    " leaves the map");
        const Rect r = fp.inflated(inflation);
        const auto lo = [&](double v, double origin) {
            return static_cast<int>(std::floor((v - origin) / resolution + kSnap));
        };
        const auto hi = [&](double v, double origin) {
            return static_cast<int>(std::ceil((v - origin) / resolution - kSnap));
        };
        const int x0 = std::max(0, lo(r.min.x, bounds.min.x));
        const int x1 = std::min(grid.width(), hi(r.max.x, bounds.min.x));
        const int y0 = std::max(0, lo(r.min.y, bounds.min.y));
        const int y1 = std::min(grid.height(), hi(r.max.y, bounds.min.y));
        for (int iy = y0; iy < y1; ++iy)
            for (int ix = x0; ix < x1; ++ix) grid.set_occupied({ix, iy}, true);
    }
    return grid;
}

PlannedPath plan_path(const OccupancyGrid& grid, Vec2 start, Vec2 goal) {
    return plan_path(grid, grid.cell_of(start), grid.cell_of(goal));
}

PlannedPath plan_path(const OccupancyGrid& grid, Cell start, Cell goal) {
    if (!grid.in_bounds(start) || !grid.in_bounds(goal)) throw OutOfBounds("path endpoint outside the map");
    if (grid.occupied(start)) throw BlockedEndpoint("start cell is occupied");
    if (grid.occupied(goal)) throw BlockedEndpoint("goal cell is occupied");

    const int w = grid.width();
    const auto n = static_cast<std::size_t>(w) * static_cast<std::size_t>(grid.height());
    auto index = [w](Cell c) { return static_cast<std::size_t>(c.iy) * static_cast<std::size_t>(w) + static_cast<std::size_t>(c.ix); };
    auto cell_at = [w](std::size_t i) { return Cell{static_cast<int>(i % static_cast<std::size_t>(w)), static_cast<int>(i / static_cast<std::size_t>(w))}; };
    const double sqrt2 = std::sqrt(2.0);
    auto heuristic = [&](Cell c) {
        const double dx = std::abs(c.ix - goal.ix), dy = std::abs(c.iy - goal.iy);
        return std::max(dx, dy) + (sqrt2 - 1.0) * std::min(dx, dy);
    };

    constexpr double inf = std::numeric_limits<double>::infinity();
    constexpr auto none = std::numeric_limits<std::size_t>::max();
    std::vector<double> g(n, inf);
    std::vector<std::size_t> parent(n, none);
    std::vector<std::uint8_t> closed(n, 0);
    using Entry = std::pair<double, std::size_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;

    const auto s = index(start), t = index(goal);
    g[s] = 0.0;
    open.emplace(heuristic(start), s);
    while (!open.empty()) {
        const auto cur = open.top().second;
        open.pop();
        if (closed[cur]) continue;
        closed[cur] = 1;
        if (cur == t) break;
        const Cell c = cell_at(cur);
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                if (dx == 0 && dy == 0) continue;
                const Cell nb{c.ix + dx, c.iy + dy};
                if (grid.occupied(nb)) continue;
                const bool diag = dx != 0 && dy != 0;
                if (diag && (grid.occupied({c.ix + dx, c.iy}) || grid.occupied({c.ix, c.iy + dy}))) continue;
                const auto ni = index(nb);
                if (closed[ni]) continue;
                const double cand = g[cur] + (diag ? sqrt2 : 1.0);
                if (cand < g[ni]) {
                    g[ni] = cand;
                    parent[ni] = cur;
                    open.emplace(cand + heuristic(nb), ni);
                }
            }
        }
    }
    if (!closed[t]) throw NoPath("no collision-free path to the goal");

    PlannedPath path;
    for (auto i = t; i != none; i = parent[i]) path.cells.push_back(cell_at(i));
    std::reverse(path.cells.begin(), path.cells.end());
    for (std::size_t i = 0; i < path.cells.size(); ++i) {
        path.waypoints.push_back(grid.center_of(path.cells[i]));
        if (i == 0) continue;
        const bool diag = path.cells[i].ix != path.cells[i - 1].ix && path.cells[i].iy != path.cells[i - 1].iy;
        ++(diag ? path.diagonal_steps : path.orthogonal_steps);
    }
    return path;
}

Vec2 lookahead_point(const Pose2D& pose, std::span<const Vec2> path, double lookahead) {
    if (path.empty()) throw EmptyPath("path has no waypoints");
    if (!(lookahead > 0.0)) throw InvalidArgument("lookahead must be positive");
    const Vec2 c = pose.position();
    if (distance(c, path.back()) <= lookahead) return path.back();

    bool found = false;
    Vec2 best{};
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        const Vec2 d = path[i + 1] - path[i];
        const Vec2 f = path[i] - c;
        const double a = dot(d, d);
        if (a == 0.0) continue;
        const double b = 2.0 * dot(f, d);
        const double cc = dot(f, f) - lookahead * lookahead;
        const double disc = b * b - 4.0 * a * cc;
        if (disc < 0.0) continue;
        const double root = std::sqrt(disc);
        for (double tt : {(-b + root) / (2.0 * a), (-b - root) / (2.0 * a)}) {
            if (tt >= 0.0 && tt <= 1.0) {
                best = path[i] + tt * d;
                found = true;
                break;  // the larger root comes first
            }
        }
    }
    if (found) return best;

    double best_d = std::numeric_limits<double>::infinity();
    best = path.front();
    for (std::size_t i = 0; i < path.size(); ++i) {
        Vec2 q = path[i];
        if (i + 1 < path.size()) {
            const Vec2 d = path[i + 1] - path[i];
            const double a = dot(d, d);
            const double tt = a == 0.0 ? 0.0 : std::clamp(dot(c - path[i], d) / a, 0.0, 1.0);
            q = path[i] + tt * d;
        }
        if (const double dd = distance(c, q); dd < best_d) {
            best_d = dd;
            best = q;
        }
    }
    return best;
}

double pure_pursuit_curvature(const Pose2D& pose, Vec2 target) {
    const double dx = target.x - pose.x, dy = target.y - pose.y;
    const double d2 = dx * dx + dy * dy;
    if (d2 < 1e-18) return 0.0;
    const double lateral = -std::sin(pose.theta) * dx + std::cos(pose.theta) * dy;
    return 2.0 * lateral / d2;
}

Pose2D integrate_arc(const Pose2D& pose, double speed, double curvature, double dt) {
    const double omega = speed * curvature;
    const double th = pose.theta;
    if (std::abs(omega * dt) < 1e-12)
        return Pose2D::make(pose.x + speed * dt * std::cos(th), pose.y + speed * dt * std::sin(th), th);
    const double th1 = th + omega * dt;
    const double r = speed / omega;
    return Pose2D::make(pose.x + r * (std::sin(th1) - std::sin(th)), pose.y - r * (std::cos(th1) - std::cos(th)), th1);
}

Pose2D pure_pursuit_step(const Pose2D& pose, std::span<const Vec2> path, double lookahead, double speed, double dt) {
    if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
    if (!(speed >= 0.0)) throw InvalidArgument("speed must be non-negative");
    const Vec2 target = lookahead_point(pose, path, lookahead);
    return integrate_arc(pose, speed, pure_pursuit_curvature(pose, target), dt);
}

} // namespace tidybot::sim
