#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "pathnet/genotype.hpp"
#include "pathnet/module_bank.hpp"

namespace pathnet {

inline constexpr int kCheckpointFormatVersion = 1;

/// A module bank plus the named genotypes that go with it
/// (e.g. "best", "source_best").
struct Checkpoint {
    ModuleBank bank;
    std::map<std::string, Genotype> genotypes;
};

/// Header fields: format_version, hyperparams, genotypes, frozen (per-layer
/// 0/1 lists), heads ([{name, classes}]), sections ([{name, rows, cols}]).
/// Payload: for each layer, each module: weights (in_dim x width, row-major)
/// then bias; followed by each head in header order, weights then bias.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace pathnet
