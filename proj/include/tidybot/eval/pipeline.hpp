#pragma once

#include <vector>

#include "tidybot/baselines/baselines.hpp"
#include "tidybot/llm/backend.hpp"
#include "tidybot/promptkit/prompts.hpp"

// The summarize-then-select LLM pipeline, one backend call per step.
namespace tidybot::pipeline {

/// Summarizes seen placements (objects listed in placement order).
Summary summarize_receptacles(const std::vector<ReceptacleName>& receptacles, const std::vector<Placement>& seen,
                              llm::Backend& backend, const llm::DecodingParams& params);

Summary summarize_primitives(const std::vector<PrimitiveChoice>& choices, llm::Backend& backend,
                             const llm::DecodingParams& params);

/// Extracts the category label set from a receptacle summary.
Summary extract_categories(const Summary& summary, llm::Backend& backend, const llm::DecodingParams& params);

baselines::LlmPrediction select_receptacles(const Summary& summary, const std::vector<ObjectName>& objects,
                                            const std::vector<ReceptacleName>& receptacles, llm::Backend& backend,
                                            const llm::DecodingParams& params);

struct PrimitivePrediction {
    std::vector<PrimitiveChoice> choices;
    std::vector<std::string> warnings;
};

PrimitivePrediction select_primitives(const Summary& summary, const std::vector<ObjectName>& objects,
                                      llm::Backend& backend, const llm::DecodingParams& params);

} // namespace tidybot::pipeline
