#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tidybot/core/types.hpp"
#include "tidybot/llm/backend.hpp"
#include "tidybot/promptkit/prompts.hpp"

namespace tidybot::baselines {

using ConceptId = std::string;

/// Undirected hypernym/hyponym graph plus a surface-name index.
class TaxonomyGraph {
public:
    /// Throws InvalidArgument on a self-loop or an empty concept id.
    void add_edge(const ConceptId& a, const ConceptId& b);
    void add_node(const ConceptId& id);
    /// Maps a surface name to an existing concept. Throws InvalidArgument if unknown.
    void add_synonym(const std::string& surface, const ConceptId& id);

    [[nodiscard]] bool contains(const ConceptId& id) const { return adjacency_.count(id) != 0; }
    [[nodiscard]] const std::vector<ConceptId>& neighbors(const ConceptId& id) const;
    [[nodiscard]] std::size_t node_count() const noexcept { return adjacency_.size(); }
    [[nodiscard]] std::size_t edge_count() const noexcept { return edges_; }
    [[nodiscard]] const std::map<std::string, ConceptId>& name_index() const noexcept { return names_; }

    /// `concept_a<TAB>concept_b` lines; `#` comments and blank lines ignored.
    static TaxonomyGraph load(const std::filesystem::path& edges,
                              const std::optional<std::filesystem::path>& synonyms = std::nullopt);

private:
    std::map<ConceptId, std::vector<ConceptId>> adjacency_;
    std::map<std::string, ConceptId> names_;
    std::size_t edges_ = 0;
};

/// Manual object-name -> concept mapping.
struct NameMapping {
    std::map<std::string, ConceptId> entries;

    /// `surface_name<TAB>concept` lines.
    static NameMapping load(const std::filesystem::path& path);
    /// Throws InvalidArgument naming the first entry whose concept is absent.
    void check_against(const TaxonomyGraph& g) const;
};

/// Edge count of the shortest undirected path. Throws InvalidArgument for an
/// unknown node and Unreachable when no path exists.
std::size_t taxonomy_distance(const TaxonomyGraph& g, const ConceptId& a, const ConceptId& b);

/// Resolution order: mapping, then the graph's synonym index, then the name
/// itself as a concept id. Throws UnmappedName.
ConceptId resolve_concept(const TaxonomyGraph& g, const NameMapping& m, const ObjectName& name);

/// Receptacle of the seen object nearest to `target` in the taxonomy; ties go
/// to the earlier seen placement. Unreachable seen objects are skipped; if all
/// are unreachable, Unreachable is thrown.
ReceptacleName taxonomy_predict(const Scenario& scenario, const TaxonomyGraph& g, const NameMapping& m,
                                const ObjectName& target);

class EmbeddingTable {
public:
    explicit EmbeddingTable(std::size_t dim);
    /// Throws DimensionMismatch or InvalidArgument (non-finite component).
    void add(const std::string& name, std::vector<double> vec);
    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] std::size_t size() const noexcept { return vectors_.size(); }
    /// Throws MissingEmbedding.
    [[nodiscard]] std::span<const double> at(const std::string& name) const;
    [[nodiscard]] bool contains(const std::string& name) const { return vectors_.count(name) != 0; }

    /// `name<TAB>v1 v2 ...` lines. Dimension is taken from the first line.
    static EmbeddingTable load(const std::filesystem::path& path);

private:
    std::size_t dim_;
    std::unordered_map<std::string, std::vector<double>> vectors_;
};

/// dot(u,v)/(|u||v|). Throws DimensionMismatch, ZeroVector.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

/// Receptacle of the seen object with maximal cosine similarity; ties go to
/// the earlier seen placement. Throws MissingEmbedding.
ReceptacleName embedding_predict(const Scenario& scenario, const EmbeddingTable& table, const ObjectName& target);

/// Nearest-neighbor primitive choice for primitive benchmarks.
Primitive taxonomy_predict_primitive(const Scenario& scenario, const TaxonomyGraph& g, const NameMapping& m,
                                     const ObjectName& target);
Primitive embedding_predict_primitive(const Scenario& scenario, const EmbeddingTable& table,
                                      const ObjectName& target);

/// LLM prediction carrying the parser's early-stop notes.
struct LlmPrediction {
    std::vector<Placement> placements;
    std::vector<std::string> warnings;
};

/// Seen examples and target objects in one prompt, no summary step.
LlmPrediction examples_only_predict(const Scenario& scenario, llm::Backend& backend,
                                    const llm::DecodingParams& params, const std::vector<ObjectName>& targets);

/// Objects and receptacles only; the user's examples are withheld.
LlmPrediction commonsense_predict(const Scenario& scenario, llm::Backend& backend, const llm::DecodingParams& params,
                                  const std::vector<ObjectName>& targets);

} // namespace tidybot::baselines
