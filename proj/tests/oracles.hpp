#pragma once

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tidybot/core/types.hpp"

namespace tidybot::test::oracle {

/// Adjacency read straight from an edge file, independent of TaxonomyGraph.
using Adjacency = std::map<std::string, std::set<std::string>>;

inline Adjacency read_edges(const std::string& path) {
    Adjacency adj;
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto tab = line.find('\t');
        const auto a = line.substr(0, tab), b = line.substr(tab + 1);
        adj[a].insert(b);
        adj[b].insert(a);
    }
    return adj;
}

/// Breadth-first distances from `src` to every reachable node.
inline std::map<std::string, int> bfs(const Adjacency& adj, const std::string& src) {
    std::map<std::string, int> dist{{src, 0}};
    std::queue<std::string> q;
    q.push(src);
    while (!q.empty()) {
        const auto u = q.front();
        q.pop();
        for (const auto& v : adj.at(u))
            if (!dist.count(v)) {
                dist[v] = dist[u] + 1;
                q.push(v);
            }
    }
    return dist;
}

inline std::optional<int> distance(const Adjacency& adj, const std::string& a, const std::string& b) {
    const auto d = bfs(adj, a);
    auto it = d.find(b);
    if (it == d.end()) return std::nullopt;
    return it->second;
}

/// Index of the seen object nearest in the graph; first index wins ties.
inline std::optional<std::size_t> nearest_taxonomy(const Adjacency& adj, const Scenario& sc, const std::string& target) {
    std::optional<std::size_t> best;
    int best_d = std::numeric_limits<int>::max();
    for (std::size_t i = 0; i < sc.seen.size(); ++i) {
        const auto d = distance(adj, target, sc.seen[i].object.str());
        if (d && *d < best_d) {
            best_d = *d;
            best = i;
        }
    }
    return best;
}

inline long double naive_cosine(const std::vector<double>& u, const std::vector<double>& v) {
    long double dot = 0, nu = 0, nv = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += static_cast<long double>(u[i]) * v[i];
        nu += static_cast<long double>(u[i]) * u[i];
        nv += static_cast<long double>(v[i]) * v[i];
    }
    return dot / std::sqrt(nu * nv);
}

inline std::size_t nearest_embedding(const std::map<std::string, std::vector<double>>& vecs, const Scenario& sc,
                                     const std::string& target) {
    std::size_t best = 0;
    long double best_s = -2;
    for (std::size_t i = 0; i < sc.seen.size(); ++i) {
        const auto s = naive_cosine(vecs.at(target), vecs.at(sc.seen[i].object.str()));
        if (s > best_s) {
            best_s = s;
            best = i;
        }
    }
    return best;
}

/// Uniform-cost search on an 8-connected grid (orthogonal 1, diagonal sqrt 2,
/// no corner cutting). `blocked[y][x]`. Returns the optimal (orthogonal,
/// diagonal) step counts, which are unique because sqrt 2 is irrational.
inline std::optional<std::pair<int, int>> ucs_steps(const std::vector<std::vector<bool>>& blocked,
                                                    std::pair<int, int> start, std::pair<int, int> goal) {
    const int h = static_cast<int>(blocked.size()), w = static_cast<int>(blocked[0].size());
    auto value = [](std::pair<int, int> c) { return c.first + std::sqrt(2.0) * c.second; };
    const std::pair<int, int> unset{-1, -1};
    std::vector<std::vector<std::pair<int, int>>> best(h, std::vector<std::pair<int, int>>(w, unset));
    std::vector<std::vector<bool>> done(h, std::vector<bool>(w, false));
    using Item = std::pair<double, std::pair<int, int>>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    best[start.second][start.first] = {0, 0};
    pq.push({0.0, start});
    while (!pq.empty()) {
        const auto [d, c] = pq.top();
        pq.pop();
        const auto [x, y] = c;
        if (done[y][x]) continue;
        done[y][x] = true;
        if (c == goal) return best[y][x];
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                if (!dx && !dy) continue;
                const int nx = x + dx, ny = y + dy;
                if (nx < 0 || ny < 0 || nx >= w || ny >= h || blocked[ny][nx] || done[ny][nx]) continue;
                if (dx && dy && (blocked[y][nx] || blocked[ny][x])) continue;
                auto cand = best[y][x];
                (dx && dy ? cand.second : cand.first) += 1;
                if (best[ny][nx] == unset || value(cand) < value(best[ny][nx])) {
                    best[ny][nx] = cand;
                    pq.push({value(cand), {nx, ny}});
                }
            }
    }
    return std::nullopt;
}

} // namespace tidybot::test::oracle
