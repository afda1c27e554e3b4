#include "tidybot/eval/pipeline.hpp"

namespace tidybot::pipeline {

Summary summarize_receptacles(const std::vector<ReceptacleName>& receptacles, const std::vector<Placement>& seen,
                              llm::Backend& backend, const llm::DecodingParams& params) {
    std::vector<ObjectName> objects;
    for (const auto& p : seen) objects.push_back(p.object);
    const auto prompt = prompts::build_receptacle_summarization_prompt(objects, receptacles, seen);
    return parse::parse_summary(backend.complete(prompt, params).completion);
}

Summary summarize_primitives(const std::vector<PrimitiveChoice>& choices, llm::Backend& backend,
                             const llm::DecodingParams& params) {
    std::vector<ObjectName> objects;
    for (const auto& c : choices) objects.push_back(c.object);
    const auto prompt = prompts::build_primitive_summarization_prompt(objects, choices);
    return parse::parse_summary(backend.complete(prompt, params).completion);
}

Summary extract_categories(const Summary& summary, llm::Backend& backend, const llm::DecodingParams& params) {
    const auto prompt = prompts::build_category_extraction_prompt(summary);
    auto categories =
        parse::parse_object_list(prompts::kObjectListPrefix, backend.complete(prompt, params).completion);
    return summary.with_categories(std::move(categories));
}

baselines::LlmPrediction select_receptacles(const Summary& summary, const std::vector<ObjectName>& objects,
                                            const std::vector<ReceptacleName>& receptacles, llm::Backend& backend,
                                            const llm::DecodingParams& params) {
    const auto prompt = prompts::build_receptacle_selection_prompt(summary, objects, receptacles);
    auto parsed = parse::parse_placements(objects.front(), backend.complete(prompt, params).completion);
    return {std::move(parsed.items), std::move(parsed.warnings)};
}

PrimitivePrediction select_primitives(const Summary& summary, const std::vector<ObjectName>& objects,
                                      llm::Backend& backend, const llm::DecodingParams& params) {
    const auto prompt = prompts::build_primitive_selection_prompt(summary, objects);
    auto parsed = parse::parse_primitive_choices(backend.complete(prompt, params).completion);
    return {std::move(parsed.items), std::move(parsed.warnings)};
}

} // namespace tidybot::pipeline
