#include "pathnet/evaluation.hpp"

#include "pathnet/aggregation.hpp"
#include "pathnet/evolution.hpp"

namespace pathnet {

Evaluation evaluate_on(const ModuleBank& bank, const Genotype& g, const std::optional<Genotype>& pinned,
                       const Dataset& data, const std::string& task)
{
    const auto posteriors = predict(bank, g, pinned, data, task);
    Evaluation e;
    e.segments = evaluate(posteriors, data.labels(), data.classes);

    const auto utterances = utterance_aggregate(data, posteriors);
    std::vector<std::vector<double>> pooled;
    std::vector<int> truths;
    for (const auto& u : utterances) {
        pooled.push_back(u.posterior);
        truths.push_back(u.truth);
    }
    e.utterances = evaluate(pooled, truths, data.classes);
    return e;
}

void to_json(nlohmann::json& j, const Evaluation& e)
{
    j = {{"segment", e.segments}, {"utterance", e.utterances}};
}

}  // namespace pathnet
