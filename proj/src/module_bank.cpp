#include "pathnet/module_bank.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include "pathnet/error.hpp"

namespace pathnet {

template <class Scalar>
BasicModuleBank<Scalar>::BasicModuleBank(const HyperParams& hp) : hp_(hp)
{
    hp.validate();
    layers_.resize(static_cast<std::size_t>(hp.num_layers));
    frozen_.assign(static_cast<std::size_t>(hp.num_layers),
                   std::vector<bool>(static_cast<std::size_t>(hp.modules_per_layer), false));
    for (int l = 0; l < hp.num_layers; ++l) {
        layers_[static_cast<std::size_t>(l)].assign(static_cast<std::size_t>(hp.modules_per_layer),
                                                    Linear<Scalar>(hp.in_dim(l), hp.module_width));
    }
}

template <class Scalar>
void BasicModuleBank<Scalar>::retune(const HyperParams& hp)
{
    hp.validate();
    if (hp.num_layers != hp_.num_layers || hp.modules_per_layer != hp_.modules_per_layer ||
        hp.module_width != hp_.module_width || hp.max_active_per_layer != hp_.max_active_per_layer ||
        hp.input_dim != hp_.input_dim) {
        throw ConfigError("hyperparameters describe a different network architecture");
    }
    hp_ = hp;
}

template <class Scalar>
void BasicModuleBank<Scalar>::check(int layer, int index) const
{
    if (layer < 0 || layer >= static_cast<int>(layers_.size()) || index < 0 ||
        index >= hp_.modules_per_layer) {
        throw Error("module (" + std::to_string(layer) + ", " + std::to_string(index) +
                    ") out of range");
    }
}

template <class Scalar>
Linear<Scalar>& BasicModuleBank<Scalar>::module(int layer, int index)
{
    check(layer, index);
    return layers_[static_cast<std::size_t>(layer)][static_cast<std::size_t>(index)];
}

template <class Scalar>
const Linear<Scalar>& BasicModuleBank<Scalar>::module(int layer, int index) const
{
    check(layer, index);
    return layers_[static_cast<std::size_t>(layer)][static_cast<std::size_t>(index)];
}

template <class Scalar>
bool BasicModuleBank<Scalar>::is_frozen(int layer, int index) const
{
    check(layer, index);
    return frozen_[static_cast<std::size_t>(layer)][static_cast<std::size_t>(index)];
}

template <class Scalar>
void BasicModuleBank<Scalar>::set_frozen(int layer, int index, bool frozen)
{
    check(layer, index);
    frozen_[static_cast<std::size_t>(layer)][static_cast<std::size_t>(index)] = frozen;
}

template <class Scalar>
std::size_t BasicModuleBank<Scalar>::frozen_count() const
{
    std::size_t n = 0;
    for (const auto& layer : frozen_) {
        for (bool f : layer) {
            n += f ? 1 : 0;
        }
    }
    return n;
}

template <class Scalar>
Linear<Scalar>& BasicModuleBank<Scalar>::head(const std::string& task)
{
    auto it = heads_.find(task);
    if (it == heads_.end()) {
        throw Error("unknown task '" + task + "'");
    }
    return it->second;
}

template <class Scalar>
const Linear<Scalar>& BasicModuleBank<Scalar>::head(const std::string& task) const
{
    auto it = heads_.find(task);
    if (it == heads_.end()) {
        throw Error("unknown task '" + task + "'");
    }
    return it->second;
}

template <class Scalar>
void BasicModuleBank<Scalar>::set_head(const std::string& task, Linear<Scalar> head)
{
    if (head.in_dim != hp_.module_width || head.out_dim < 1) {
        throw Error("head for task '" + task + "' has wrong shape");
    }
    heads_[task] = std::move(head);
}

template <class Scalar>
std::size_t BasicModuleBank<Scalar>::module_parameter_count() const
{
    std::size_t n = 0;
    for (const auto& layer : layers_) {
        for (const auto& m : layer) {
            n += m.parameter_count();
        }
    }
    return n;
}

template <class Scalar>
void init_linear(Linear<Scalar>& layer, Rng& rng)
{
    const double limit = std::sqrt(6.0 / layer.in_dim);
    for (auto& w : layer.weights) {
        w = static_cast<Scalar>(rng.uniform(-limit, limit));
    }
    std::fill(layer.bias.begin(), layer.bias.end(), Scalar(0));
}

template <class Scalar>
BasicModuleBank<Scalar> init_params(const HyperParams& hp, Rng& rng)
{
    BasicModuleBank<Scalar> bank(hp);
    for (int l = 0; l < hp.num_layers; ++l) {
        for (int m = 0; m < hp.modules_per_layer; ++m) {
            init_linear(bank.module(l, m), rng);
        }
    }
    return bank;
}

template <class Scalar>
void add_head(BasicModuleBank<Scalar>& bank, const std::string& task, int num_classes, Rng& rng)
{
    if (num_classes < 1) {
        throw Error("add_head: task '" + task + "' needs at least one class");
    }
    Linear<Scalar> head(bank.hyper_params().module_width, num_classes);
    init_linear(head, rng);
    bank.set_head(task, std::move(head));
}

template <class Scalar>
BasicModuleBank<Scalar> reinit_except(const BasicModuleBank<Scalar>& bank, const Genotype& keep, Rng& rng)
{
    const HyperParams& hp = bank.hyper_params();
    keep.validate(hp);
    const ActiveSet kept = active_modules(keep);

    BasicModuleBank<Scalar> out = init_params<Scalar>(hp, rng);
    for (int l = 0; l < hp.num_layers; ++l) {
        for (int m : kept[static_cast<std::size_t>(l)]) {
            out.module(l, m) = bank.module(l, m);
            out.set_frozen(l, m, true);
        }
    }
    for (const auto& [task, head] : bank.heads()) {
        add_head(out, task, head.out_dim, rng);
    }
    return out;
}

std::int64_t count_pathway_params(const HyperParams& hp, const Genotype& g)
{
    g.validate(hp);
    const ActiveSet active = active_modules(g);
    std::int64_t total = 0;
    for (int l = 0; l < hp.num_layers; ++l) {
        const std::int64_t per_module =
            static_cast<std::int64_t>(hp.in_dim(l)) * hp.module_width + hp.module_width;
        total += static_cast<std::int64_t>(active[static_cast<std::size_t>(l)].size()) * per_module;
    }
    return total;
}

namespace {

void fnv1a(std::uint64_t& h, std::span<const float> values)
{
    for (float v : values) {
        std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
        for (int b = 0; b < 4; ++b) {
            h ^= (bits >> (8 * b)) & 0xffU;
            h *= 0x100000001b3ULL;
        }
    }
}

}  // namespace

std::uint64_t module_checksum(const Linear<float>& module)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    fnv1a(h, module.weights);
    fnv1a(h, module.bias);
    return h;
}

template class BasicModuleBank<float>;
template class BasicModuleBank<double>;

template void init_linear<float>(Linear<float>&, Rng&);
template void init_linear<double>(Linear<double>&, Rng&);
template BasicModuleBank<float> init_params<float>(const HyperParams&, Rng&);
template BasicModuleBank<double> init_params<double>(const HyperParams&, Rng&);
template void add_head<float>(BasicModuleBank<float>&, const std::string&, int, Rng&);
template void add_head<double>(BasicModuleBank<double>&, const std::string&, int, Rng&);
template BasicModuleBank<float> reinit_except<float>(const BasicModuleBank<float>&, const Genotype&, Rng&);
template BasicModuleBank<double> reinit_except<double>(const BasicModuleBank<double>&, const Genotype&, Rng&);

}  // namespace pathnet
