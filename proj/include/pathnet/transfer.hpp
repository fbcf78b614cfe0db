#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pathnet/dataset.hpp"
#include "pathnet/evaluation.hpp"
#include "pathnet/evolution.hpp"

namespace pathnet {

inline constexpr const char* kSourceTask = "source";
inline constexpr const char* kDestinationTask = "destination";

struct TransferSeeds {
    std::uint64_t source = 0;
    std::uint64_t destination = 0;
    std::uint64_t baseline = 0;
};

struct TransferPlan {
    std::vector<Dataset> sources;
    /// Class order of the joint source head. Empty means the first source's classes.
    std::vector<std::string> shared_label_space;
    Dataset destination_train;
    /// Held-out destination data; probed every generation and scored at the end.
    Dataset destination_test;
    /// Empty means destination_train.classes.
    std::vector<std::string> destination_label_space;
    HyperParams hp_source;
    HyperParams hp_dest;
    TransferSeeds seeds;
};

/// Classes present in every list, in the order of the first list.
std::vector<std::string> shared_classes(const std::vector<std::vector<std::string>>& class_lists);

/// Samples whose class is in `keep`, relabelled to `keep` order.
Dataset restrict_to_classes(const Dataset& data, const std::vector<std::string>& keep);

/// Concatenates datasets (in order) with labels re-indexed to `shared`.
/// Subjects become "<dataset name>:<subject>" and manifest rows are offset
/// so they stay distinct. Throws DataError naming an unmappable label.
Dataset join_sources(const std::vector<Dataset>& datasets, const std::vector<std::string>& shared);

struct SourceOutcome {
    BestPathway best;
    ModuleBank bank;
    History history;
};

struct FrozenChecksum {
    ModuleId module;
    std::uint64_t checksum = 0;
};

struct DestinationRun {
    EvolutionResult result;
    std::optional<Genotype> pinned;
    std::optional<Evaluation> evaluation;
};

struct DestinationOutcome {
    DestinationRun transfer;
    DestinationRun scratch;
    std::vector<FrozenChecksum> frozen_pre;
    std::vector<FrozenChecksum> frozen_post;

    bool frozen_intact() const;
};

struct TransferOutcome {
    SourceOutcome source;
    DestinationOutcome destination;
};

/// Evolves on the joined sources with a fresh bank (seed: seeds.source).
SourceOutcome run_source_phase(const TransferPlan& plan);

/// Freezes the source path, reinitializes everything else, and re-evolves on
/// the destination with the source path pinned (seed: seeds.destination);
/// also runs the from-scratch baseline (seed: seeds.baseline).
DestinationOutcome run_destination_phase(const SourceOutcome& source, const TransferPlan& plan);

TransferOutcome run_transfer(const TransferPlan& plan);

/// Plain evolution on `train` from a fresh bank: no pinned path, nothing frozen.
EvolutionResult scratch_baseline(const Dataset& train, HyperParams hp, std::uint64_t seed,
                                 const Dataset* probe = nullptr);

/// Checksums of the modules active in `g`.
std::vector<FrozenChecksum> path_checksums(const ModuleBank& bank, const Genotype& g);

/// Summary written as transfer_report.json; `curves` maps names to file paths.
nlohmann::json transfer_report(const SourceOutcome& source, const DestinationOutcome& destination,
                               const nlohmann::json& curves);

}  // namespace pathnet
