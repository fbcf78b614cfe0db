#pragma once

#include <span>
#include <string>
#include <vector>

#include "pathnet/dataset.hpp"

namespace pathnet {

struct UtterancePrediction {
    std::string key;
    int truth = 0;
    std::vector<double> posterior;
    int predicted = 0;
};

/// Mean of the segment posteriors; argmax with ties to the lowest class.
/// Throws on an empty group or ragged posteriors.
UtterancePrediction aggregate_segments(std::span<const std::vector<double>> segment_posteriors);

/// Groups the samples of `data` by utterance key (first-appearance order)
/// and aggregates each group.
std::vector<UtterancePrediction> utterance_aggregate(const Dataset& data,
                                                     const std::vector<std::vector<double>>& segment_posteriors);

}  // namespace pathnet
