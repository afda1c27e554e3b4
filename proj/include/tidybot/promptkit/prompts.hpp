#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tidybot/core/types.hpp"

namespace tidybot {

enum class PromptKind {
    ReceptacleSummarization,
    ReceptacleSelection,
    PrimitiveSummarization,
    PrimitiveSelection,
    CategoryExtraction,
    ReceptacleSelectionReal,
    PrimitiveSelectionReal,
    ExamplesOnly,
    Commonsense,
};

std::string_view to_string(PromptKind k) noexcept;

struct PromptText {
    std::string text;
    PromptKind kind;

    friend bool operator==(const PromptText&, const PromptText&) = default;
};

/// One-line natural-language rule produced by a summarization step, plus the
/// category list extracted from it when that step has run.
class Summary {
public:
    /// Throws EmptySummary when `text` is blank, InvalidArgument when it spans lines.
    explicit Summary(std::string text, std::optional<std::vector<ObjectName>> categories = std::nullopt);

    [[nodiscard]] const std::string& text() const noexcept { return text_; }
    [[nodiscard]] const std::optional<std::vector<ObjectName>>& categories() const noexcept { return categories_; }
    [[nodiscard]] Summary with_categories(std::vector<ObjectName> categories) const;

    friend bool operator==(const Summary&, const Summary&) = default;

private:
    std::string text_;
    std::optional<std::vector<ObjectName>> categories_;
};

/// Parse output plus notes on where and why parsing stopped early.
template <typename T>
struct Parsed {
    std::vector<T> items;
    std::vector<std::string> warnings;
};

namespace prompts {

/// The fixed in-context block for a prompt kind, exactly as shipped in
/// prompts/incontext/. Empty for kinds without in-context examples.
std::string_view in_context_block(PromptKind kind) noexcept;

PromptText build_receptacle_summarization_prompt(const std::vector<ObjectName>& objects,
                                                 const std::vector<ReceptacleName>& receptacles,
                                                 const std::vector<Placement>& seen);

PromptText build_receptacle_selection_prompt(const Summary& summary, const std::vector<ObjectName>& objects,
                                             const std::vector<ReceptacleName>& receptacles);

PromptText build_primitive_summarization_prompt(const std::vector<ObjectName>& objects,
                                                const std::vector<PrimitiveChoice>& choices);

PromptText build_primitive_selection_prompt(const Summary& summary, const std::vector<ObjectName>& objects);

PromptText build_category_extraction_prompt(const Summary& summary);

/// Selection prompts over category names for the robot loop. The receptacle
/// prompt is conditioned on the receptacle summary and the primitive prompt
/// on the primitive summary.
std::pair<PromptText, PromptText> build_realworld_selection_prompts(const Summary& receptacle_summary,
                                                                    const Summary& primitive_summary,
                                                                    const std::vector<ObjectName>& categories,
                                                                    const std::vector<ReceptacleName>& receptacles);

/// Seen block (objects, receptacles, calls), a blank line, then the target
/// objects ending with a partial call for the first target.
PromptText build_examples_only_prompt(const std::vector<Placement>& seen, const std::vector<ObjectName>& targets,
                                      const std::vector<ReceptacleName>& receptacles);

PromptText build_commonsense_prompt(const std::vector<ObjectName>& objects,
                                    const std::vector<ReceptacleName>& receptacles);

/// The object list opener that ends a category-extraction prompt.
inline constexpr std::string_view kObjectListPrefix = "objects = [\"";

/// Text the completion continues for a receptacle-selection style prompt.
std::string partial_call(const ObjectName& first_object);

} // namespace prompts

namespace parse {

/// Trimmed first line of the completion after `# Summary:`. Throws EmptySummary.
Summary parse_summary(std::string_view completion);

/// Stitches `pick_and_place("<first>",` with the completion and reads
/// consecutive two-argument calls. Throws StitchError when the first line does
/// not form a valid call and DslSyntaxError on a malformed later call.
Parsed<Placement> parse_placements(const ObjectName& first_object, std::string_view completion);

/// Whole-line one-argument calls until the first non-call line.
Parsed<PrimitiveChoice> parse_primitive_choices(std::string_view completion);

/// Stitches `prefix + completion` and reads one bracketed string list.
/// Throws DslSyntaxError or DuplicateName.
std::vector<ObjectName> parse_object_list(std::string_view prefix, std::string_view completion);

} // namespace parse

} // namespace tidybot
