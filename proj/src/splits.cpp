#include "pathnet/splits.hpp"

#include <algorithm>
#include <map>

#include "pathnet/error.hpp"
#include "pathnet/rng.hpp"

namespace pathnet {

namespace {

Fold make_fold(std::string name, const std::vector<bool>& is_test)
{
    Fold fold;
    fold.name = std::move(name);
    for (std::size_t r = 0; r < is_test.size(); ++r) {
        (is_test[r] ? fold.test_rows : fold.train_rows).push_back(r);
    }
    return fold;
}

}  // namespace

SplitPlan kfold_split(const DatasetManifest& manifest, int k, std::uint64_t seed)
{
    if (k < 2) {
        throw ConfigError("k-fold split needs k >= 2");
    }
    // Utterances in first-appearance order, each with its rows.
    std::map<std::pair<std::string, std::string>, std::size_t> index;
    std::vector<std::vector<std::size_t>> utterances;
    for (std::size_t r = 0; r < manifest.rows.size(); ++r) {
        const auto key = std::make_pair(manifest.rows[r].subject, manifest.rows[r].utterance);
        auto [it, inserted] = index.emplace(key, utterances.size());
        if (inserted) {
            utterances.emplace_back();
        }
        utterances[it->second].push_back(r);
    }
    if (utterances.size() < static_cast<std::size_t>(k)) {
        throw DataError("dataset '" + manifest.name + "' has " + std::to_string(utterances.size()) +
                        " utterances, fewer than k = " + std::to_string(k));
    }
    std::vector<std::size_t> order(utterances.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order));

    SplitPlan plan{"kfold", k, {}};
    for (int f = 0; f < k; ++f) {
        std::vector<bool> is_test(manifest.rows.size(), false);
        for (std::size_t pos = static_cast<std::size_t>(f); pos < order.size(); pos += static_cast<std::size_t>(k)) {
            for (std::size_t r : utterances[order[pos]]) {
                is_test[r] = true;
            }
        }
        plan.folds.push_back(make_fold("fold" + std::to_string(f), is_test));
    }
    return plan;
}

SplitPlan losocv_split(const DatasetManifest& manifest)
{
    std::vector<std::string> subjects;
    for (const auto& row : manifest.rows) {
        subjects.push_back(row.subject);
    }
    std::sort(subjects.begin(), subjects.end());
    subjects.erase(std::unique(subjects.begin(), subjects.end()), subjects.end());
    if (subjects.size() < 2) {
        throw DataError("leave-one-subject-out needs at least two subjects in '" + manifest.name + "'");
    }
    SplitPlan plan{"losocv", static_cast<int>(subjects.size()), {}};
    for (const auto& subject : subjects) {
        std::vector<bool> is_test(manifest.rows.size(), false);
        for (std::size_t r = 0; r < manifest.rows.size(); ++r) {
            is_test[r] = manifest.rows[r].subject == subject;
        }
        plan.folds.push_back(make_fold(subject, is_test));
    }
    return plan;
}

}  // namespace pathnet
