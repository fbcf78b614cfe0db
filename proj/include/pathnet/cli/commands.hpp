#pragma once

#include <filesystem>

#include "pathnet/cli/config.hpp"

namespace pathnet::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 1,
    kExitData = 2,
    kExitRuntime = 3,
};

/// WAV manifest -> one feature cache per utterance plus `index.csv`.
/// Unchanged inputs (same content hash and mel settings) are skipped.
/// Returns kExitData when any file failed.
int cmd_extract(const ExperimentConfig& config);
/// Evolution on each fold of the configured dataset.
int cmd_train(const ExperimentConfig& config);
/// Source evolution, then transfer and scratch runs on each destination fold.
int cmd_transfer(const ExperimentConfig& config);
/// Writes the synthetic source/destination pair as feature caches.
int cmd_synth(const ExperimentConfig& config);
/// Consolidates a finished run directory into `<run_dir>/report/`.
int cmd_report(const std::filesystem::path& run_dir);

/// Full command line entry point; maps exceptions to exit codes.
int run(int argc, char** argv);

}  // namespace pathnet::cli
