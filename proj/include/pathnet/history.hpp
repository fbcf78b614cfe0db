#pragma once

#include <filesystem>
#include <optional>
#include <vector>

namespace pathnet {

/// One tournament. `generation` counts completed generations (1-based).
struct HistoryEntry {
    int generation = 0;
    int winner_index = 0;
    double winner_fitness = 0.0;
    double loser_fitness = 0.0;
    std::optional<double> test_accuracy;

    bool operator==(const HistoryEntry&) const = default;
};

using History = std::vector<HistoryEntry>;

/// CSV with header generation,winner_index,winner_fitness,loser_fitness,test_accuracy.
/// Reals use 17 significant digits; an absent test accuracy is an empty field.
void write_history_csv(const std::filesystem::path& path, const History& history);
History read_history_csv(const std::filesystem::path& path);

}  // namespace pathnet
