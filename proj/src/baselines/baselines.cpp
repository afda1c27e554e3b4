#include "tidybot/baselines/baselines.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

#include "tidybot/core/dataset.hpp"

namespace tidybot::baselines {

namespace {

std::vector<std::pair<std::string, std::string>> read_tsv_pairs(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty() || line.front() == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected two tab-separated fields",
                             line_no, "");
        out.emplace_back(std::string(trim(line.substr(0, tab))), std::string(trim(line.substr(tab + 1))));
    }
    return out;
}

/// BFS distances from `source` to every reachable node.
std::map<ConceptId, std::size_t> distances_from(const TaxonomyGraph& g, const ConceptId& source) {
    std::map<ConceptId, std::size_t> dist;
    std::deque<ConceptId> queue;
    dist[source] = 0;
    queue.push_back(source);
    while (!queue.empty()) {
        auto cur = std::move(queue.front());
        queue.pop_front();
        const auto d = dist[cur];
        for (const auto& n : g.neighbors(cur)) {
            if (dist.try_emplace(n, d + 1).second) queue.push_back(n);
        }
    }
    return dist;
}

/// Index of the seen placement closest to `target`, earliest on ties.
std::size_t nearest_seen_taxonomy(const Scenario& sc, const TaxonomyGraph& g, const NameMapping& m,
                                  const ObjectName& target) {
    if (sc.seen.empty()) throw InvalidArgument("scenario '" + sc.id + "' has no seen placements");
    const auto tc = resolve_concept(g, m, target);
    std::vector<ConceptId> seen_concepts;
    for (const auto& p : sc.seen) seen_concepts.push_back(resolve_concept(g, m, p.object));
    const auto dist = distances_from(g, tc);
    std::size_t best = sc.seen.size();
    std::size_t best_d = std::numeric_limits<std::size_t>::max();
    for (std::size_t i = 0; i < seen_concepts.size(); ++i) {
        auto it = dist.find(seen_concepts[i]);
        if (it == dist.end()) continue;
        if (it->second < best_d) {
            best_d = it->second;
            best = i;
        }
    }
    if (best == sc.seen.size())
        throw Unreachable("no seen object of scenario '" + sc.id + "' is connected to '" + target.str() + "'");
    return best;
}

std::size_t nearest_seen_embedding(const Scenario& sc, const EmbeddingTable& table, const ObjectName& target) {
    if (sc.seen.empty()) throw InvalidArgument("scenario '" + sc.id + "' has no seen placements");
    const auto t = table.at(target.str());
    std::size_t best = 0;
    double best_sim = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < sc.seen.size(); ++i) {
        const double s = cosine_similarity(t, table.at(sc.seen[i].object.str()));
        if (s > best_sim) {
            best_sim = s;
            best = i;
        }
    }
    return best;
}

Primitive primitive_of(const Scenario& sc, std::size_t seen_index) {
    if (!sc.seen_primitives) throw MissingAnnotations("scenario '" + sc.id + "' has no primitive annotations");
    const auto& obj = sc.seen[seen_index].object;
    for (const auto& c : *sc.seen_primitives)
        if (c.object == obj) return c.primitive;
    throw MissingAnnotations("seen object '" + obj.str() + "' has no primitive annotation");
}

LlmPrediction complete_and_parse(const PromptText& prompt, const ObjectName& first, llm::Backend& backend,
                                 const llm::DecodingParams& params) {
    auto rec = backend.complete(prompt, params);
    auto parsed = parse::parse_placements(first, rec.completion);
    return {std::move(parsed.items), std::move(parsed.warnings)};
}

} // namespace

void TaxonomyGraph::add_node(const ConceptId& id) {
    if (id.empty()) throw InvalidArgument("empty concept id");
    adjacency_.try_emplace(id);
}

void TaxonomyGraph::add_edge(const ConceptId& a, const ConceptId& b) {
    if (a.empty() || b.empty()) throw InvalidArgument("empty concept id");
    if (a == b) throw InvalidArgument("self-loop on concept '" + a + "'");
    auto& na = adjacency_[a];
    if (std::find(na.begin(), na.end(), b) != na.end()) return;
    na.push_back(b);
    adjacency_[b].push_back(a);
    ++edges_;
}

void TaxonomyGraph::add_synonym(const std::string& surface, const ConceptId& id) {
    if (!contains(id)) throw InvalidArgument("synonym '" + surface + "' maps to unknown concept '" + id + "'");
    names_[surface] = id;
}

const std::vector<ConceptId>& TaxonomyGraph::neighbors(const ConceptId& id) const {
    auto it = adjacency_.find(id);
    if (it == adjacency_.end()) throw InvalidArgument("unknown concept '" + id + "'");
    return it->second;
}

TaxonomyGraph TaxonomyGraph::load(const std::filesystem::path& edges,
                                  const std::optional<std::filesystem::path>& synonyms) {
    TaxonomyGraph g;
    for (const auto& [a, b] : read_tsv_pairs(edges)) g.add_edge(a, b);
    if (synonyms)
        for (const auto& [name, id] : read_tsv_pairs(*synonyms)) g.add_synonym(name, id);
    return g;
}

NameMapping NameMapping::load(const std::filesystem::path& path) {
    NameMapping m;
    for (auto& [name, id] : read_tsv_pairs(path)) m.entries[name] = id;
    return m;
}

void NameMapping::check_against(const TaxonomyGraph& g) const {
    for (const auto& [name, id] : entries)
        if (!g.contains(id)) throw InvalidArgument("mapping '" + name + "' -> '" + id + "' names an unknown concept");
}

std::size_t taxonomy_distance(const TaxonomyGraph& g, const ConceptId& a, const ConceptId& b) {
    if (!g.contains(a)) throw InvalidArgument("unknown concept '" + a + "'");
    if (!g.contains(b)) throw InvalidArgument("unknown concept '" + b + "'");
    if (a == b) return 0;
    std::map<ConceptId, std::size_t> dist{{a, 0}};
    std::deque<ConceptId> queue{a};
    while (!queue.empty()) {
        auto cur = std::move(queue.front());
        queue.pop_front();
        const auto d = dist[cur];
        for (const auto& n : g.neighbors(cur)) {
            if (!dist.try_emplace(n, d + 1).second) continue;
            if (n == b) return d + 1;
            queue.push_back(n);
        }
    }
    throw Unreachable("no path between '" + a + "' and '" + b + "'");
}

ConceptId resolve_concept(const TaxonomyGraph& g, const NameMapping& m, const ObjectName& name) {
    if (auto it = m.entries.find(name.str()); it != m.entries.end()) {
        if (!g.contains(it->second))
            throw UnmappedName("'" + name.str() + "' maps to unknown concept '" + it->second + "'");
        return it->second;
    }
    if (auto it = g.name_index().find(name.str()); it != g.name_index().end()) return it->second;
    if (g.contains(name.str())) return name.str();
    throw UnmappedName("object '" + name.str() + "' has no taxonomy mapping");
}

ReceptacleName taxonomy_predict(const Scenario& scenario, const TaxonomyGraph& g, const NameMapping& m,
                                const ObjectName& target) {
    return scenario.seen[nearest_seen_taxonomy(scenario, g, m, target)].receptacle;
}

Primitive taxonomy_predict_primitive(const Scenario& scenario, const TaxonomyGraph& g, const NameMapping& m,
                                     const ObjectName& target) {
    return primitive_of(scenario, nearest_seen_taxonomy(scenario, g, m, target));
}

EmbeddingTable::EmbeddingTable(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw InvalidArgument("embedding dimension must be positive");
}

void EmbeddingTable::add(const std::string& name, std::vector<double> vec) {
    if (vec.size() != dim_)
        throw DimensionMismatch("embedding for '" + name + "' has " + std::to_string(vec.size()) +
                                " components, expected " + std::to_string(dim_));
    for (double x : vec)
        if (!std::isfinite(x)) throw InvalidArgument("embedding for '" + name + "' has a non-finite component");
    vectors_[name] = std::move(vec);
}

std::span<const double> EmbeddingTable::at(const std::string& name) const {
    auto it = vectors_.find(name);
    if (it == vectors_.end()) throw MissingEmbedding("no embedding for '" + name + "'");
    return it->second;
}

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path) {
    std::optional<EmbeddingTable> table;
    for (const auto& [name, values] : read_tsv_pairs(path)) {
        std::istringstream vs(values);
        std::vector<double> vec;
        double x = 0;
        while (vs >> x) vec.push_back(x);
        if (!vs.eof()) throw ParseError(path.string() + ": bad number in embedding for '" + name + "'", 0, name);
        if (!table) table.emplace(vec.size());
        table->add(name, std::move(vec));
    }
    if (!table) throw ParseError(path.string() + ": embedding table is empty", 0, "");
    return std::move(*table);
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size() || u.empty())
        throw DimensionMismatch("cosine similarity needs equal nonzero lengths (" + std::to_string(u.size()) + " vs " +
                                std::to_string(v.size()) + ")");
    double dot = 0, nu = 0, nv = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0.0 || nv == 0.0) throw ZeroVector("cosine similarity of an all-zero vector");
    return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

ReceptacleName embedding_predict(const Scenario& scenario, const EmbeddingTable& table, const ObjectName& target) {
    return scenario.seen[nearest_seen_embedding(scenario, table, target)].receptacle;
}

Primitive embedding_predict_primitive(const Scenario& scenario, const EmbeddingTable& table,
                                      const ObjectName& target) {
    return primitive_of(scenario, nearest_seen_embedding(scenario, table, target));
}

LlmPrediction examples_only_predict(const Scenario& scenario, llm::Backend& backend,
                                    const llm::DecodingParams& params, const std::vector<ObjectName>& targets) {
    const auto prompt = prompts::build_examples_only_prompt(scenario.seen, targets, scenario.receptacles);
    return complete_and_parse(prompt, targets.front(), backend, params);
}

LlmPrediction commonsense_predict(const Scenario& scenario, llm::Backend& backend, const llm::DecodingParams& params,
                                  const std::vector<ObjectName>& targets) {
    const auto prompt = prompts::build_commonsense_prompt(targets, scenario.receptacles);
    return complete_and_parse(prompt, targets.front(), backend, params);
}

} // namespace tidybot::baselines
