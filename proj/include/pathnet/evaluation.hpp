#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "pathnet/dataset.hpp"
#include "pathnet/genotype.hpp"
#include "pathnet/metrics.hpp"
#include "pathnet/module_bank.hpp"

namespace pathnet {

/// Held-out scores at segment level and after mean-posterior utterance aggregation.
struct Evaluation {
    EvalReport segments;
    EvalReport utterances;
};

Evaluation evaluate_on(const ModuleBank& bank, const Genotype& g, const std::optional<Genotype>& pinned,
                       const Dataset& data, const std::string& task);

void to_json(nlohmann::json& j, const Evaluation& e);

}  // namespace pathnet
