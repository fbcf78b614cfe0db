#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "pathnet/dataset.hpp"

namespace pathnet {

/// Gaussian-blob classification tasks with controllable relatedness between
/// a source and a destination task.
struct SyntheticSpec {
    int num_classes = 6;
    int dim = 64 * 64 * 3;
    int samples_per_class = 100;
    /// Destination samples per class; 0 means same as the source.
    int destination_samples_per_class = 0;
    int subjects = 4;
    /// rho: destination prototype = rho * source + sqrt(1 - rho^2) * fresh.
    double relatedness = 0.9;
    /// Norm-scale of the isotropic noise (per-coordinate std = noise / sqrt(dim)).
    double noise = 0.5;
    /// Norm-scale of each subject's mean offset.
    double subject_shift = 0.2;
    int segments_per_utterance = 1;

    void validate() const;
};

void to_json(nlohmann::json& j, const SyntheticSpec& s);
void from_json(const nlohmann::json& j, SyntheticSpec& s);

struct SyntheticTask {
    DatasetManifest manifest;
    Dataset data;
    /// Unit-norm class prototypes, one per class.
    std::vector<std::vector<double>> prototypes;
};

struct SyntheticPair {
    SyntheticTask source;
    SyntheticTask destination;
};

SyntheticPair gen_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

/// Writes one feature cache per utterance under `dir` plus `dir/manifest.csv`;
/// the manifest paths are relative to `dir`.
void write_synthetic_task(const SyntheticTask& task, const std::filesystem::path& dir);

}  // namespace pathnet
