#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "tidybot/core/errors.hpp"
#include "tidybot/sim/nav.hpp"

namespace tidybot::test {

struct PlannerCheck {
    int grids = 0;
    int solvable = 0;
    int cost_mismatches = 0;
    int invalid_paths = 0;
    std::string first_failure;
};

/// Plans between random free cells on random grids and compares against the
/// uniform-cost oracle. Every returned path must be 8-connected, start and end
/// at the endpoints, avoid occupied cells and never cut a corner.
inline PlannerCheck check_planner(int grids, int size, std::uint64_t seed) {
    using namespace sim;
    PlannerCheck out;
    std::mt19937_64 rng(seed);
    for (int g = 0; g < grids; ++g) {
        const double density = 0.1 + 0.3 * static_cast<double>(rng() % 1000) / 1000.0;
        OccupancyGrid grid(Rect{{0, 0}, {static_cast<double>(size), static_cast<double>(size)}}, 1.0);
        std::vector<std::vector<bool>> blocked(size, std::vector<bool>(size, false));
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x)
                if (static_cast<double>(rng() % 10000) / 10000.0 < density) {
                    blocked[y][x] = true;
                    grid.set_occupied({x, y}, true);
                }
        auto free_cell = [&] {
            for (;;) {
                const int x = static_cast<int>(rng() % size), y = static_cast<int>(rng() % size);
                if (!blocked[y][x]) return Cell{x, y};
            }
        };
        const auto s = free_cell(), t = free_cell();
        ++out.grids;
        const auto want = oracle::ucs_steps(blocked, {s.ix, s.iy}, {t.ix, t.iy});
        try {
            const auto path = plan_path(grid, s, t);
            ++out.solvable;
            if (!want || static_cast<int>(path.orthogonal_steps) != want->first ||
                static_cast<int>(path.diagonal_steps) != want->second) {
                ++out.cost_mismatches;
                if (out.first_failure.empty()) out.first_failure = "cost mismatch on grid " + std::to_string(g);
            }
            bool ok = !path.cells.empty() && path.cells.front() == s && path.cells.back() == t &&
                      path.waypoints.size() == path.cells.size();
            std::size_t orth = 0, diag = 0;
            for (std::size_t i = 0; ok && i < path.cells.size(); ++i) {
                const auto c = path.cells[i];
                if (grid.occupied(c)) ok = false;
                if (i == 0) continue;
                const auto p = path.cells[i - 1];
                const int dx = c.ix - p.ix, dy = c.iy - p.iy;
                if (std::abs(dx) > 1 || std::abs(dy) > 1 || (dx == 0 && dy == 0)) ok = false;
                if (dx && dy) {
                    ++diag;
                    if (grid.occupied({p.ix + dx, p.iy}) || grid.occupied({p.ix, p.iy + dy})) ok = false;
                } else {
                    ++orth;
                }
            }
            if (orth != path.orthogonal_steps || diag != path.diagonal_steps) ok = false;
            if (!ok) {
                ++out.invalid_paths;
                if (out.first_failure.empty()) out.first_failure = "invalid path on grid " + std::to_string(g);
            }
        } catch (const NoPath&) {
            if (want) {
                ++out.cost_mismatches;
                if (out.first_failure.empty()) out.first_failure = "planner missed a path on grid " + std::to_string(g);
            }
        }
    }
    return out;
}

struct PursuitCheck {
    bool reached = false;
    bool monotone = true;
    bool stays_captured = true;
    bool strictly_monotone = true;
    double overshoot = 0.0;
    std::size_t steps = 0;
    std::size_t budget = 0;
    double final_error = 0.0;
    std::vector<double> errors;
};

/// Tracks a straight path along +x from a pose offset by `offset` meters.
/// `monotone` covers the approach until the error first drops below one cell;
/// `stays_captured` requires it to remain below one cell afterwards.
inline PursuitCheck check_pursuit(double offset, double length = 5.0, double lookahead = 0.3, double speed = 0.5,
                                  double dt = 0.05, double resolution = 0.05) {
    using namespace sim;
    std::vector<Vec2> path;
    for (double x = 0; x <= length + 1e-9; x += resolution) path.push_back({x, 0.0});
    PursuitCheck out;
    const auto straight_steps = static_cast<std::size_t>(std::ceil(length / (speed * dt)));
    out.budget = 10 * straight_steps;
    Pose2D pose = Pose2D::make(0.0, offset, 0.0);
    const Vec2 goal = path.back();
    out.errors.push_back(std::abs(pose.y));
    while (out.steps < out.budget) {
        pose = pure_pursuit_step(pose, path, lookahead, speed, dt);
        ++out.steps;
        out.errors.push_back(std::abs(pose.y));
        if (std::abs(pose.x - goal.x) <= resolution / 2 && std::abs(pose.y - goal.y) <= resolution / 2) {
            out.reached = true;
            break;
        }
    }
    bool captured = false;
    for (std::size_t i = 2; i < out.errors.size(); ++i) {
        const bool rises = out.errors[i] > out.errors[i - 1] + 1e-12;
        if (rises) out.strictly_monotone = false;
        if (!out.strictly_monotone) out.overshoot = std::max(out.overshoot, out.errors[i]);
        if (!captured && out.errors[i - 1] < resolution) captured = true;
        if (captured) {
            if (out.errors[i] >= resolution) out.stays_captured = false;
        } else if (rises) {
            out.monotone = false;
        }
    }
    out.final_error = out.errors.back();
    return out;
}

} // namespace tidybot::test
