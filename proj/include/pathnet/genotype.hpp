#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pathnet/hyper_params.hpp"

namespace pathnet {

/// L x N matrix of module indices; row l names the modules a pathway uses
/// in layer l. Duplicate genes within a row are allowed.
class Genotype {
public:
    Genotype() = default;
    Genotype(int layers, int genes_per_layer);
    explicit Genotype(const std::vector<std::vector<int>>& rows);

    int layers() const { return layers_; }
    int genes_per_layer() const { return width_; }
    std::size_t size() const { return genes_.size(); }

    int& at(int layer, int slot) { return genes_[index(layer, slot)]; }
    int at(int layer, int slot) const { return genes_[index(layer, slot)]; }
    std::span<const int> layer(int l) const;
    std::span<int> genes() { return genes_; }
    std::span<const int> genes() const { return genes_; }

    /// Throws ConfigError unless the shape is L x N and every gene is in [0, M-1].
    void validate(const HyperParams& hp) const;

    bool operator==(const Genotype&) const = default;

private:
    std::size_t index(int layer, int slot) const;

    int layers_ = 0;
    int width_ = 0;
    std::vector<int> genes_;
};

/// Distinct module indices per layer, ascending.
using ActiveSet = std::vector<std::vector<int>>;

ActiveSet active_modules(const Genotype& g);
/// Per-layer set union; both sets must have the same number of layers.
ActiveSet merge_active(const ActiveSet& a, const ActiveSet& b);

std::string to_string(const Genotype& g);

void to_json(nlohmann::json& j, const Genotype& g);
void from_json(const nlohmann::json& j, Genotype& g);

}  // namespace pathnet
