#pragma once

#include <cstdint>
#include <optional>

#include <json.hpp>

namespace pathnet {

/// Architecture and training settings of a modular network run.
/// Defaults reproduce the 3-layer, 20-module, 4-active-module setting.
struct HyperParams {
    int num_layers = 3;
    int modules_per_layer = 20;
    int module_width = 20;
    int max_active_per_layer = 4;
    int input_dim = 64 * 64 * 3;
    double learning_rate = 0.02;
    int batch_size = 64;
    int generations = 200;
    int population_size = 20;
    /// Per-gene mutation probability; 1/(N*L) when unset.
    std::optional<double> mutation_prob;
    /// Mutation deltas are drawn uniformly from [-mutation_range, mutation_range].
    int mutation_range = 2;
    std::uint64_t rng_seed = 0;

    double effective_mutation_prob() const;
    /// Input width of modules in `layer` (0-based).
    int in_dim(int layer) const { return layer == 0 ? input_dim : module_width; }

    /// Throws ConfigError naming the first violated constraint.
    void validate() const;

    bool operator==(const HyperParams&) const = default;
};

void to_json(nlohmann::json& j, const HyperParams& hp);
/// Missing keys keep their defaults; unknown keys are rejected.
void from_json(const nlohmann::json& j, HyperParams& hp);

}  // namespace pathnet
