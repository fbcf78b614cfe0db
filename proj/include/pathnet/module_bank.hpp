#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pathnet/genotype.hpp"
#include "pathnet/hyper_params.hpp"
#include "pathnet/rng.hpp"

namespace pathnet {

/// Affine map y = W^T x + b with W stored row-major as in_dim x out_dim.
template <class Scalar>
struct Linear {
    int in_dim = 0;
    int out_dim = 0;
    std::vector<Scalar> weights;
    std::vector<Scalar> bias;

    Linear() = default;
    Linear(int in, int out)
        : in_dim(in), out_dim(out),
          weights(static_cast<std::size_t>(in) * static_cast<std::size_t>(out), Scalar(0)),
          bias(static_cast<std::size_t>(out), Scalar(0))
    {
    }

    Scalar& w(int i, int j) { return weights[static_cast<std::size_t>(i) * out_dim + j]; }
    Scalar w(int i, int j) const { return weights[static_cast<std::size_t>(i) * out_dim + j]; }
    std::size_t parameter_count() const { return weights.size() + bias.size(); }
    bool same_shape(const Linear& other) const
    {
        return in_dim == other.in_dim && out_dim == other.out_dim;
    }

    bool operator==(const Linear&) const = default;
};

struct ModuleId {
    int layer = 0;
    int index = 0;
    auto operator<=>(const ModuleId&) const = default;
};

/// Every learnable parameter of a modular network: M modules per layer,
/// one readout head per task, and the freeze mask.
template <class Scalar>
class BasicModuleBank {
public:
    BasicModuleBank() = default;
    /// All parameters zero, nothing frozen, no heads.
    explicit BasicModuleBank(const HyperParams& hp);

    const HyperParams& hyper_params() const { return hp_; }
    /// Swaps in new training settings; the architecture fields must match.
    void retune(const HyperParams& hp);

    Linear<Scalar>& module(int layer, int index);
    const Linear<Scalar>& module(int layer, int index) const;
    Linear<Scalar>& module(ModuleId id) { return module(id.layer, id.index); }
    const Linear<Scalar>& module(ModuleId id) const { return module(id.layer, id.index); }

    bool is_frozen(int layer, int index) const;
    void set_frozen(int layer, int index, bool frozen);
    std::size_t frozen_count() const;

    bool has_head(const std::string& task) const { return heads_.contains(task); }
    /// Throws Error("unknown task ...") when no head exists.
    Linear<Scalar>& head(const std::string& task);
    const Linear<Scalar>& head(const std::string& task) const;
    void set_head(const std::string& task, Linear<Scalar> head);
    const std::map<std::string, Linear<Scalar>>& heads() const { return heads_; }
    std::map<std::string, Linear<Scalar>>& heads() { return heads_; }

    /// Module parameters only, heads excluded.
    std::size_t module_parameter_count() const;

    bool operator==(const BasicModuleBank&) const = default;

private:
    void check(int layer, int index) const;

    HyperParams hp_;
    std::vector<std::vector<Linear<Scalar>>> layers_;
    std::vector<std::vector<bool>> frozen_;
    std::map<std::string, Linear<Scalar>> heads_;
};

using ModuleBank = BasicModuleBank<float>;

/// Fills `layer` with i.i.d. uniform draws in +-sqrt(6 / in_dim); zero bias.
template <class Scalar>
void init_linear(Linear<Scalar>& layer, Rng& rng);

template <class Scalar>
BasicModuleBank<Scalar> init_params(const HyperParams& hp, Rng& rng);

/// Creates (or replaces) the readout head of `task` with a fresh draw.
template <class Scalar>
void add_head(BasicModuleBank<Scalar>& bank, const std::string& task, int num_classes, Rng& rng);

/// Copy of `bank` where the modules active in `keep` are preserved and
/// frozen, every other module is redrawn, and every head is redrawn.
///
/// Draws are made for all modules in (layer, index) order, kept ones
/// included, so the non-kept modules equal what init_params would produce
/// from the same stream.
template <class Scalar>
BasicModuleBank<Scalar> reinit_except(const BasicModuleBank<Scalar>& bank, const Genotype& keep, Rng& rng);

std::int64_t count_pathway_params(const HyperParams& hp, const Genotype& g);

/// FNV-1a over the little-endian bytes of weights then bias.
std::uint64_t module_checksum(const Linear<float>& module);

extern template class BasicModuleBank<float>;
extern template class BasicModuleBank<double>;

}  // namespace pathnet
