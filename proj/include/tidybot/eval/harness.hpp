#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "tidybot/baselines/baselines.hpp"
#include "tidybot/core/types.hpp"
#include "tidybot/llm/backend.hpp"
#include "tidybot/promptkit/prompts.hpp"

namespace tidybot::eval {

enum class MethodKind { Summarization, ExamplesOnly, Commonsense, Taxonomy, Embedding, HumanSummary };

/// CLI spellings: summarization, examples-only, commonsense, taxonomy, embedding, human-summary.
std::string_view to_string(MethodKind k) noexcept;
std::optional<MethodKind> parse_method_kind(std::string_view s) noexcept;
[[nodiscard]] bool uses_llm(MethodKind k) noexcept;

struct MethodResources {
    std::optional<std::filesystem::path> taxonomy;           // edge list
    std::optional<std::filesystem::path> taxonomy_synonyms;  // optional surface-name index
    std::optional<std::filesystem::path> name_mapping;
    std::optional<std::filesystem::path> embeddings;
    std::optional<std::filesystem::path> human_summaries;    // scenario_id<TAB>summary
};

struct MethodSpec {
    MethodKind kind = MethodKind::Summarization;
    std::optional<llm::BackendConfig> backend;
    MethodResources resources;

    /// Throws ConfigError when a required backend or resource is absent.
    void validate() const;
};

/// A method with its resources loaded and its backend constructed.
struct MethodContext {
    MethodKind kind = MethodKind::Summarization;
    std::shared_ptr<llm::Backend> backend;
    llm::DecodingParams params;
    std::shared_ptr<const baselines::TaxonomyGraph> taxonomy;
    std::shared_ptr<const baselines::NameMapping> mapping;
    std::shared_ptr<const baselines::EmbeddingTable> embeddings;
    std::map<std::string, std::string> human_summaries;

    /// Throws ConfigError when the kind's requirements are not loaded.
    void check() const;
};

/// Loads every resource named by the spec. Throws ConfigError (or the
/// loader's ParseError) before any scenario is evaluated.
MethodContext prepare_method(const MethodSpec& spec);

/// `scenario_id<TAB>summary text` lines.
std::map<std::string, std::string> load_human_summaries(const std::filesystem::path& path);

enum class Split { Seen, Unseen };
std::string_view to_string(Split s) noexcept;

enum class AnomalyKind { UnparsedOutput, ExtraneousObject, UnknownReceptacle, DuplicatePrediction, MethodError };
std::string_view to_string(AnomalyKind k) noexcept;

struct Anomaly {
    Split split = Split::Unseen;
    AnomalyKind kind = AnomalyKind::MethodError;
    std::string detail;

    friend bool operator==(const Anomaly&, const Anomaly&) = default;
};

/// A raw (object, label) pair as emitted by a method. The label is a
/// receptacle name or a primitive spelling.
struct Prediction {
    std::string object;
    std::string label;

    friend bool operator==(const Prediction&, const Prediction&) = default;
};

std::vector<Prediction> to_predictions(const std::vector<Placement>& placements);
std::vector<Prediction> to_predictions(const std::vector<PrimitiveChoice>& choices);

struct SplitResult {
    std::vector<Prediction> predictions;
    std::size_t total = 0;
    std::size_t correct = 0;
    std::size_t incorrect = 0;
    std::size_t unpredicted = 0;
    double accuracy = 0.0;
};

struct ScenarioResult {
    std::string scenario_id;
    std::set<SortingCriterion> criteria;
    std::optional<std::string> summary;
    SplitResult seen;
    SplitResult unseen;
    std::vector<Anomaly> anomalies;

    [[nodiscard]] const SplitResult& split(Split s) const noexcept { return s == Split::Seen ? seen : unseen; }
};

/// Scores receptacle predictions. Matching is normalized exact equality; the
/// first prediction per object counts, later ones are flagged; predictions
/// for objects outside the split are flagged and ignored; receptacles outside
/// the scenario list are flagged and scored incorrect.
ScenarioResult score_scenario(const Scenario& scenario, const std::vector<Prediction>& seen,
                              const std::vector<Prediction>& unseen);

/// Same protocol over primitive labels. Throws MissingAnnotations.
ScenarioResult score_primitive_scenario(const Scenario& scenario, const std::vector<Prediction>& seen,
                                        const std::vector<Prediction>& unseen);

struct SummarizationOutput {
    Summary summary;
    baselines::LlmPrediction seen;
    baselines::LlmPrediction unseen;
};

/// Summarize the seen examples, then query the unseen list and (separately)
/// the seen list through the summary. Errors propagate.
SummarizationOutput run_summarization_method(const Scenario& scenario, llm::Backend& backend,
                                             const llm::DecodingParams& params);

enum class Task { Receptacle, Primitive };
std::string_view to_string(Task t) noexcept;

struct CriterionStats {
    std::size_t scenarios = 0;
    double macro_acc_seen = 0.0;
    double macro_acc_unseen = 0.0;
};

struct BenchmarkReport {
    Task task = Task::Receptacle;
    MethodKind method = MethodKind::Summarization;
    std::string model_id;
    std::string backend_fingerprint;
    std::string seen_protocol;
    std::vector<ScenarioResult> results;  // sorted by scenario id
    double macro_acc_seen = 0.0;
    double macro_acc_unseen = 0.0;
    std::map<SortingCriterion, CriterionStats> per_criterion;

    [[nodiscard]] std::size_t anomaly_count() const noexcept;
    /// Canonical report; contains no timings, so replay runs are byte-stable.
    [[nodiscard]] std::string to_json() const;
    /// One row per scenario per split.
    [[nodiscard]] std::string to_csv() const;
    /// Macro accuracies and the per-criterion table for terminal output.
    [[nodiscard]] std::string to_text() const;
};

/// Evaluates one scenario. Method failures become MethodError anomalies.
ScenarioResult evaluate_scenario(const Scenario& scenario, const MethodContext& method);
ScenarioResult evaluate_primitive_scenario(const Scenario& scenario, const MethodContext& method);

/// Runs every scenario on `workers` threads and merges in scenario-id order.
BenchmarkReport run_benchmark(const Dataset& ds, const MethodContext& method, std::size_t workers);
BenchmarkReport run_benchmark(const Dataset& ds, const MethodSpec& method, std::size_t workers);

/// Primitive-choice benchmark. Supports Summarization, Taxonomy and
/// Embedding. Throws MissingAnnotations if any scenario lacks annotations.
BenchmarkReport run_primitive_benchmark(const Dataset& ds, const MethodContext& method, std::size_t workers);
BenchmarkReport run_primitive_benchmark(const Dataset& ds, const MethodSpec& method, std::size_t workers);

/// Builds a report from already-scored results (macro and per-criterion means).
BenchmarkReport aggregate(Task task, const MethodContext& method, std::vector<ScenarioResult> results);

} // namespace tidybot::eval
