#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pathnet/dataset.hpp"

namespace pathnet {

struct Fold {
    std::string name;
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> test_rows;
};

/// Folds over manifest row indices. Rows sharing an utterance (subject +
/// utterance id) always land on the same side of a fold.
struct SplitPlan {
    std::string scheme;  // "kfold" or "losocv"
    int k = 0;
    std::vector<Fold> folds;
};

/// Utterances shuffled by `seed` and dealt round-robin into k folds.
SplitPlan kfold_split(const DatasetManifest& manifest, int k, std::uint64_t seed);
/// One fold per subject, subjects in lexicographic order.
SplitPlan losocv_split(const DatasetManifest& manifest);

}  // namespace pathnet
