#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pathnet/genotype.hpp"
#include "pathnet/module_bank.hpp"

namespace pathnet {

/// Row-major B x input_dim inputs with one class label per row.
template <class Scalar>
struct Batch {
    int input_dim = 0;
    std::vector<Scalar> inputs;
    std::vector<int> labels;

    std::size_t size() const { return labels.size(); }
    std::span<const Scalar> row(std::size_t i) const
    {
        return std::span<const Scalar>(inputs).subspan(i * static_cast<std::size_t>(input_dim),
                                                       static_cast<std::size_t>(input_dim));
    }
};

/// Gradient entries exist only for trainable parameters touched by a pass:
/// the unfrozen active modules and the task head.
template <class Scalar>
struct Gradients {
    std::map<ModuleId, Linear<Scalar>> modules;
    std::string task;
    Linear<Scalar> head;
};

template <class Scalar>
struct LossAndGrads {
    double loss = 0.0;
    /// Rows whose argmax prediction matched the label (computed before any update).
    std::size_t correct = 0;
    Gradients<Scalar> grads;
};

/// Modules evaluated per layer for genotype `g`, merged with `pinned` when given.
ActiveSet effective_active(const HyperParams& hp, const Genotype& g, const std::optional<Genotype>& pinned);

/// Class posterior for one input. Each active module computes ReLU(W^T h + b),
/// modules of a layer are averaged, and the task head applies softmax.
template <class Scalar>
std::vector<double> forward(const BasicModuleBank<Scalar>& bank, const Genotype& g,
                            const std::optional<Genotype>& pinned, std::span<const Scalar> x,
                            const std::string& task);

/// Posteriors for `count` row-major inputs.
template <class Scalar>
std::vector<std::vector<double>> forward_rows(const BasicModuleBank<Scalar>& bank, const Genotype& g,
                                              const std::optional<Genotype>& pinned,
                                              std::span<const Scalar> inputs, std::size_t count,
                                              const std::string& task);

/// Mean softmax cross-entropy over the batch and its gradient.
template <class Scalar>
LossAndGrads<Scalar> loss_and_grads(const BasicModuleBank<Scalar>& bank, const Genotype& g,
                                    const std::optional<Genotype>& pinned, const Batch<Scalar>& batch,
                                    const std::string& task);

/// theta <- theta - learning_rate * grad for every entry in `grads`.
template <class Scalar>
void sgd_step(BasicModuleBank<Scalar>& bank, const Gradients<Scalar>& grads, double learning_rate);

/// Index of the largest entry; ties resolve to the lowest index.
std::size_t argmax(std::span<const double> values);

}  // namespace pathnet
