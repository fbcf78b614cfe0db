#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pathnet/audio/features.hpp"
#include "pathnet/hyper_params.hpp"
#include "pathnet/synthetic.hpp"

namespace pathnet::cli {

/// Command-line overrides shared by every command.
struct CommandOptions {
    std::filesystem::path config;
    std::optional<std::filesystem::path> out;
    std::optional<std::uint64_t> seed;
    /// "losocv", "kfold:K", optionally followed by "@i,j" to run selected folds.
    std::optional<std::string> folds;
};

/// A dataset either read from a manifest or taken from the in-memory
/// synthetic pair ("source" / "destination").
struct DatasetRef {
    std::optional<std::filesystem::path> manifest;
    std::string synthetic;
    std::string name;
    std::vector<std::string> classes;
    std::string modality;
};

struct SplitConfig {
    std::string scheme = "kfold";
    int k = 5;
    /// Fold indices to run; empty runs all.
    std::vector<int> only;
};

struct Seeds {
    std::uint64_t base = 0;
    std::uint64_t split = 0;
    std::uint64_t train = 0;
    std::uint64_t source = 0;
    std::uint64_t destination = 0;
    std::uint64_t baseline = 0;
    std::uint64_t synthetic = 0;
};

struct ExtractConfig {
    std::filesystem::path manifest;
    std::filesystem::path cache_dir;
};

struct TransferConfig {
    std::vector<DatasetRef> sources;
    DatasetRef destination;
    std::vector<std::string> shared_label_space;
    bool drop_unshared = false;
};

/// Parsed experiment configuration (JSON). Relative paths resolve against
/// the directory of the config file.
struct ExperimentConfig {
    std::filesystem::path config_dir;
    std::filesystem::path output_dir;
    Seeds seeds;
    HyperParams hp_source;
    HyperParams hp_dest;
    /// Whether input_dim was given; otherwise it follows the data.
    bool input_dim_explicit = false;
    audio::MelConfig mel;
    bool normalize = true;
    std::optional<ExtractConfig> extract;
    std::optional<DatasetRef> dataset;
    SplitConfig split;
    std::optional<TransferConfig> transfer;
    std::optional<SyntheticSpec> synthetic;
    nlohmann::json raw;

    /// Config with defaults, resolved seeds and absolute paths filled in.
    nlohmann::json resolved() const;
};

/// Parses the file named by `options.config` and applies the overrides.
/// Throws ConfigError for malformed content or missing referenced files.
ExperimentConfig load_config(const CommandOptions& options);
ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& config_dir,
                              const CommandOptions& options);

SplitConfig parse_folds(const std::string& spec);

}  // namespace pathnet::cli
