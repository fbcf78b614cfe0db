#include "pathnet/genotype.hpp"

#include <algorithm>
#include <iterator>
#include <sstream>

#include "pathnet/error.hpp"

namespace pathnet {

Genotype::Genotype(int layers, int genes_per_layer)
    : layers_(layers), width_(genes_per_layer),
      genes_(static_cast<std::size_t>(layers) * static_cast<std::size_t>(genes_per_layer), 0)
{
    if (layers < 0 || genes_per_layer < 0) {
        throw Error("Genotype: negative shape");
    }
}

Genotype::Genotype(const std::vector<std::vector<int>>& rows)
{
    layers_ = static_cast<int>(rows.size());
    width_ = rows.empty() ? 0 : static_cast<int>(rows.front().size());
    for (const auto& row : rows) {
        if (static_cast<int>(row.size()) != width_) {
            throw Error("Genotype: ragged gene matrix");
        }
        genes_.insert(genes_.end(), row.begin(), row.end());
    }
}

std::size_t Genotype::index(int layer, int slot) const
{
    if (layer < 0 || layer >= layers_ || slot < 0 || slot >= width_) {
        throw Error("Genotype: index out of range");
    }
    return static_cast<std::size_t>(layer) * width_ + slot;
}

std::span<const int> Genotype::layer(int l) const
{
    return std::span<const int>(genes_).subspan(index(l, 0), static_cast<std::size_t>(width_));
}

void Genotype::validate(const HyperParams& hp) const
{
    if (layers_ != hp.num_layers || width_ != hp.max_active_per_layer) {
        throw ConfigError("genotype shape " + std::to_string(layers_) + "x" + std::to_string(width_) +
                          " does not match hyperparameters " + std::to_string(hp.num_layers) + "x" +
                          std::to_string(hp.max_active_per_layer));
    }
    for (int gene : genes_) {
        if (gene < 0 || gene >= hp.modules_per_layer) {
            throw ConfigError("gene " + std::to_string(gene) + " outside [0, " +
                              std::to_string(hp.modules_per_layer - 1) + "]");
        }
    }
}

ActiveSet active_modules(const Genotype& g)
{
    ActiveSet active(static_cast<std::size_t>(g.layers()));
    for (int l = 0; l < g.layers(); ++l) {
        auto genes = g.layer(l);
        auto& set = active[static_cast<std::size_t>(l)];
        set.assign(genes.begin(), genes.end());
        std::sort(set.begin(), set.end());
        set.erase(std::unique(set.begin(), set.end()), set.end());
    }
    return active;
}

ActiveSet merge_active(const ActiveSet& a, const ActiveSet& b)
{
    if (a.size() != b.size()) {
        throw Error("merge_active: layer count mismatch");
    }
    ActiveSet merged(a.size());
    for (std::size_t l = 0; l < a.size(); ++l) {
        std::set_union(a[l].begin(), a[l].end(), b[l].begin(), b[l].end(),
                       std::back_inserter(merged[l]));
    }
    return merged;
}

std::string to_string(const Genotype& g)
{
    std::ostringstream out;
    out << '[';
    for (int l = 0; l < g.layers(); ++l) {
        out << (l ? ",[" : "[");
        auto genes = g.layer(l);
        for (std::size_t i = 0; i < genes.size(); ++i) {
            out << (i ? "," : "") << genes[i];
        }
        out << ']';
    }
    out << ']';
    return out.str();
}

void to_json(nlohmann::json& j, const Genotype& g)
{
    j = nlohmann::json::array();
    for (int l = 0; l < g.layers(); ++l) {
        auto genes = g.layer(l);
        j.push_back(std::vector<int>(genes.begin(), genes.end()));
    }
}

void from_json(const nlohmann::json& j, Genotype& g)
{
    try {
        g = Genotype(j.get<std::vector<std::vector<int>>>());
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed genotype: ") + e.what());
    }
}

}  // namespace pathnet
