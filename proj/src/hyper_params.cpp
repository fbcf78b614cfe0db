#include "pathnet/hyper_params.hpp"

#include <cmath>
#include <set>
#include <string>

#include "pathnet/error.hpp"

namespace pathnet {

double HyperParams::effective_mutation_prob() const
{
    if (mutation_prob) {
        return *mutation_prob;
    }
    return 1.0 / (static_cast<double>(max_active_per_layer) * num_layers);
}

void HyperParams::validate() const
{
    auto require = [](bool ok, const char* what) {
        if (!ok) {
            throw ConfigError(std::string("invalid hyperparameters: ") + what);
        }
    };
    require(num_layers >= 1, "num_layers must be >= 1");
    require(modules_per_layer >= 1, "modules_per_layer must be >= 1");
    require(max_active_per_layer >= 1 && max_active_per_layer <= modules_per_layer,
            "max_active_per_layer must lie in [1, modules_per_layer]");
    require(module_width >= 1, "module_width must be >= 1");
    require(input_dim >= 1, "input_dim must be >= 1");
    require(std::isfinite(learning_rate) && learning_rate > 0.0, "learning_rate must be > 0");
    require(batch_size >= 1, "batch_size must be >= 1");
    require(generations >= 0, "generations must be >= 0");
    require(population_size >= 2, "population_size must be >= 2");
    const double p = effective_mutation_prob();
    require(p >= 0.0 && p <= 1.0, "mutation_prob must lie in [0, 1]");
    require(mutation_range >= 0, "mutation_range must be >= 0");
}

void to_json(nlohmann::json& j, const HyperParams& hp)
{
    j = nlohmann::json{
        {"num_layers", hp.num_layers},
        {"modules_per_layer", hp.modules_per_layer},
        {"module_width", hp.module_width},
        {"max_active_per_layer", hp.max_active_per_layer},
        {"input_dim", hp.input_dim},
        {"learning_rate", hp.learning_rate},
        {"batch_size", hp.batch_size},
        {"generations", hp.generations},
        {"population_size", hp.population_size},
        {"mutation_range", hp.mutation_range},
        {"rng_seed", hp.rng_seed},
    };
    if (hp.mutation_prob) {
        j["mutation_prob"] = *hp.mutation_prob;
    } else {
        j["mutation_prob"] = nullptr;
    }
}

void from_json(const nlohmann::json& j, HyperParams& hp)
{
    if (!j.is_object()) {
        throw ConfigError("hyperparameters must be a JSON object");
    }
    static const std::set<std::string> known = {
        "num_layers", "modules_per_layer", "module_width", "max_active_per_layer",
        "input_dim", "learning_rate", "batch_size", "generations", "population_size",
        "mutation_prob", "mutation_range", "rng_seed"};
    for (const auto& [key, value] : j.items()) {
        if (!known.contains(key)) {
            throw ConfigError("unknown hyperparameter '" + key + "'");
        }
    }
    try {
        auto get = [&](const char* key, auto& field) {
            if (j.contains(key)) {
                j.at(key).get_to(field);
            }
        };
        get("num_layers", hp.num_layers);
        get("modules_per_layer", hp.modules_per_layer);
        get("module_width", hp.module_width);
        get("max_active_per_layer", hp.max_active_per_layer);
        get("input_dim", hp.input_dim);
        get("learning_rate", hp.learning_rate);
        get("batch_size", hp.batch_size);
        get("generations", hp.generations);
        get("population_size", hp.population_size);
        get("mutation_range", hp.mutation_range);
        get("rng_seed", hp.rng_seed);
        if (j.contains("mutation_prob")) {
            if (j.at("mutation_prob").is_null()) {
                hp.mutation_prob.reset();
            } else {
                hp.mutation_prob = j.at("mutation_prob").get<double>();
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("hyperparameters: ") + e.what());
    }
}

}  // namespace pathnet
