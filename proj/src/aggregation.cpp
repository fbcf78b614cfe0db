#include "pathnet/aggregation.hpp"

#include <map>

#include "pathnet/error.hpp"
#include "pathnet/network.hpp"

namespace pathnet {

UtterancePrediction aggregate_segments(std::span<const std::vector<double>> segment_posteriors)
{
    if (segment_posteriors.empty()) {
        throw Error("cannot aggregate an utterance with no segments");
    }
    const std::size_t classes = segment_posteriors.front().size();
    UtterancePrediction out;
    out.posterior.assign(classes, 0.0);
    for (const auto& p : segment_posteriors) {
        if (p.size() != classes) {
            throw Error("segment posteriors of one utterance differ in width");
        }
        for (std::size_t c = 0; c < classes; ++c) {
            out.posterior[c] += p[c];
        }
    }
    for (double& v : out.posterior) {
        v /= static_cast<double>(segment_posteriors.size());
    }
    out.predicted = static_cast<int>(argmax(out.posterior));
    return out;
}

std::vector<UtterancePrediction> utterance_aggregate(const Dataset& data,
                                                     const std::vector<std::vector<double>>& segment_posteriors)
{
    if (segment_posteriors.size() != data.size()) {
        throw Error("utterance_aggregate: one posterior per sample required");
    }
    std::map<std::string, std::size_t> group_of;
    std::vector<std::vector<std::vector<double>>> groups;
    std::vector<std::string> keys;
    std::vector<int> truths;
    for (std::size_t i = 0; i < data.size(); ++i) {
        auto key = data.utterance_key(i);
        auto [it, inserted] = group_of.emplace(key, groups.size());
        if (inserted) {
            groups.emplace_back();
            keys.push_back(key);
            truths.push_back(data.label(i));
        } else if (truths[it->second] != data.label(i)) {
            throw DataError("utterance '" + key + "' has segments with different labels");
        }
        groups[it->second].push_back(segment_posteriors[i]);
    }
    std::vector<UtterancePrediction> out;
    out.reserve(groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g) {
        UtterancePrediction p = aggregate_segments(groups[g]);
        p.key = keys[g];
        p.truth = truths[g];
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace pathnet
