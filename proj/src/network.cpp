#include "pathnet/network.hpp"

#include <algorithm>
#include <cmath>

#include "pathnet/error.hpp"

namespace pathnet {

std::size_t argmax(std::span<const double> values)
{
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) {
            best = i;
        }
    }
    return best;
}

ActiveSet effective_active(const HyperParams& hp, const Genotype& g, const std::optional<Genotype>& pinned)
{
    g.validate(hp);
    ActiveSet active = active_modules(g);
    if (pinned) {
        pinned->validate(hp);
        active = merge_active(active, active_modules(*pinned));
    }
    return active;
}

namespace {

/// Activations of one forward pass, kept for backpropagation.
template <class Scalar>
struct Trace {
    // outputs[l] is the averaged output of layer l.
    std::vector<std::vector<Scalar>> outputs;
    // pre[l][k] is the pre-activation of the k-th active module of layer l.
    std::vector<std::vector<std::vector<Scalar>>> pre;
    std::vector<Scalar> logits;
    std::vector<double> probs;
};

template <class Scalar>
void affine(const Linear<Scalar>& layer, std::span<const Scalar> in, std::vector<Scalar>& out)
{
    out.assign(layer.bias.begin(), layer.bias.end());
    const int width = layer.out_dim;
    for (int i = 0; i < layer.in_dim; ++i) {
        const Scalar xi = in[static_cast<std::size_t>(i)];
        if (xi == Scalar(0)) {
            continue;
        }
        const Scalar* row = layer.weights.data() + static_cast<std::size_t>(i) * width;
        for (int j = 0; j < width; ++j) {
            out[static_cast<std::size_t>(j)] += xi * row[j];
        }
    }
}

template <class Scalar>
void run_forward(const BasicModuleBank<Scalar>& bank, const ActiveSet& active, const Linear<Scalar>& head,
                 std::span<const Scalar> x, Trace<Scalar>& trace)
{
    const HyperParams& hp = bank.hyper_params();
    const auto layers = static_cast<std::size_t>(hp.num_layers);
    const auto width = static_cast<std::size_t>(hp.module_width);
    trace.outputs.resize(layers);
    trace.pre.resize(layers);

    std::vector<double> sum(width);
    std::span<const Scalar> in = x;
    for (std::size_t l = 0; l < layers; ++l) {
        const auto& modules = active[l];
        trace.pre[l].resize(modules.size());
        std::fill(sum.begin(), sum.end(), 0.0);
        for (std::size_t k = 0; k < modules.size(); ++k) {
            auto& z = trace.pre[l][k];
            affine(bank.module(static_cast<int>(l), modules[k]), in, z);
            for (std::size_t j = 0; j < width; ++j) {
                sum[j] += std::max(z[j], Scalar(0));
            }
        }
        auto& h = trace.outputs[l];
        h.resize(width);
        const double count = static_cast<double>(modules.size());
        for (std::size_t j = 0; j < width; ++j) {
            h[j] = static_cast<Scalar>(sum[j] / count);
        }
        in = h;
    }

    affine(head, in, trace.logits);
    const Scalar top = *std::max_element(trace.logits.begin(), trace.logits.end());
    trace.probs.resize(trace.logits.size());
    double total = 0.0;
    for (std::size_t c = 0; c < trace.logits.size(); ++c) {
        trace.probs[c] = std::exp(static_cast<double>(trace.logits[c]) - static_cast<double>(top));
        total += trace.probs[c];
    }
    for (double& p : trace.probs) {
        p /= total;
    }
}

template <class Scalar>
void check_input(const HyperParams& hp, std::span<const Scalar> x)
{
    if (x.size() != static_cast<std::size_t>(hp.input_dim)) {
        throw Error("input length " + std::to_string(x.size()) + " != input_dim " +
                    std::to_string(hp.input_dim));
    }
    for (Scalar v : x) {
        if (!std::isfinite(v)) {
            throw Error("non-finite input value");
        }
    }
}

}  // namespace

template <class Scalar>
std::vector<double> forward(const BasicModuleBank<Scalar>& bank, const Genotype& g,
                            const std::optional<Genotype>& pinned, std::span<const Scalar> x,
                            const std::string& task)
{
    const Linear<Scalar>& head = bank.head(task);
    const ActiveSet active = effective_active(bank.hyper_params(), g, pinned);
    check_input(bank.hyper_params(), x);
    Trace<Scalar> trace;
    run_forward(bank, active, head, x, trace);
    return trace.probs;
}

template <class Scalar>
std::vector<std::vector<double>> forward_rows(const BasicModuleBank<Scalar>& bank, const Genotype& g,
                                              const std::optional<Genotype>& pinned,
                                              std::span<const Scalar> inputs, std::size_t count,
                                              const std::string& task)
{
    const HyperParams& hp = bank.hyper_params();
    const Linear<Scalar>& head = bank.head(task);
    const ActiveSet active = effective_active(hp, g, pinned);
    const auto dim = static_cast<std::size_t>(hp.input_dim);
    if (inputs.size() != count * dim) {
        throw Error("forward_rows: input buffer does not hold " + std::to_string(count) + " rows");
    }
    std::vector<std::vector<double>> out;
    out.reserve(count);
    Trace<Scalar> trace;
    for (std::size_t r = 0; r < count; ++r) {
        auto x = inputs.subspan(r * dim, dim);
        check_input(hp, x);
        run_forward(bank, active, head, x, trace);
        out.push_back(trace.probs);
    }
    return out;
}

template <class Scalar>
LossAndGrads<Scalar> loss_and_grads(const BasicModuleBank<Scalar>& bank, const Genotype& g,
                                    const std::optional<Genotype>& pinned, const Batch<Scalar>& batch,
                                    const std::string& task)
{
    const HyperParams& hp = bank.hyper_params();
    const Linear<Scalar>& head = bank.head(task);
    const ActiveSet active = effective_active(hp, g, pinned);
    if (batch.input_dim != hp.input_dim || batch.inputs.size() != batch.size() * static_cast<std::size_t>(hp.input_dim)) {
        throw Error("batch shape does not match input_dim");
    }
    if (batch.size() == 0) {
        throw Error("empty batch");
    }

    LossAndGrads<Scalar> result;
    result.grads.task = task;
    result.grads.head = Linear<Scalar>(head.in_dim, head.out_dim);
    for (int l = 0; l < hp.num_layers; ++l) {
        for (int m : active[static_cast<std::size_t>(l)]) {
            if (!bank.is_frozen(l, m)) {
                result.grads.modules.emplace(ModuleId{l, m}, Linear<Scalar>(hp.in_dim(l), hp.module_width));
            }
        }
    }

    const auto layers = static_cast<std::size_t>(hp.num_layers);
    const auto width = static_cast<std::size_t>(hp.module_width);
    const auto classes = static_cast<std::size_t>(head.out_dim);
    const double inv_batch = 1.0 / static_cast<double>(batch.size());

    Trace<Scalar> trace;
    std::vector<Scalar> dlogits(classes);
    std::vector<Scalar> grad_out(width);
    std::vector<Scalar> grad_in(width);
    std::vector<Scalar> dz(width);
    double loss = 0.0;

    for (std::size_t r = 0; r < batch.size(); ++r) {
        const int label = batch.labels[r];
        if (label < 0 || static_cast<std::size_t>(label) >= classes) {
            throw Error("label " + std::to_string(label) + " outside task '" + task + "' classes");
        }
        auto x = batch.row(r);
        check_input(hp, x);
        run_forward(bank, active, head, x, trace);

        if (argmax(trace.probs) == static_cast<std::size_t>(label)) {
            ++result.correct;
        }
        // -log softmax via log-sum-exp of the logits.
        const double top = static_cast<double>(*std::max_element(trace.logits.begin(), trace.logits.end()));
        double denom = 0.0;
        for (Scalar v : trace.logits) {
            denom += std::exp(static_cast<double>(v) - top);
        }
        loss += top + std::log(denom) - static_cast<double>(trace.logits[static_cast<std::size_t>(label)]);

        for (std::size_t c = 0; c < classes; ++c) {
            const double target = c == static_cast<std::size_t>(label) ? 1.0 : 0.0;
            dlogits[c] = static_cast<Scalar>((trace.probs[c] - target) * inv_batch);
        }

        // Head.
        const auto& h_last = trace.outputs[layers - 1];
        auto& gh = result.grads.head;
        std::fill(grad_out.begin(), grad_out.end(), Scalar(0));
        for (std::size_t i = 0; i < width; ++i) {
            for (std::size_t c = 0; c < classes; ++c) {
                gh.weights[i * classes + c] += h_last[i] * dlogits[c];
                grad_out[i] += head.weights[i * classes + c] * dlogits[c];
            }
        }
        for (std::size_t c = 0; c < classes; ++c) {
            gh.bias[c] += dlogits[c];
        }

        // Module layers, last to first. grad_out holds dL/d(layer output).
        for (std::size_t l = layers; l-- > 0;) {
            const auto& modules = active[l];
            const Scalar share = static_cast<Scalar>(1.0 / static_cast<double>(modules.size()));
            std::span<const Scalar> in = l == 0 ? x : std::span<const Scalar>(trace.outputs[l - 1]);
            if (l > 0) {
                std::fill(grad_in.begin(), grad_in.end(), Scalar(0));
            }
            for (std::size_t k = 0; k < modules.size(); ++k) {
                const auto& z = trace.pre[l][k];
                bool any = false;
                for (std::size_t j = 0; j < width; ++j) {
                    dz[j] = z[j] > Scalar(0) ? grad_out[j] * share : Scalar(0);
                    any = any || dz[j] != Scalar(0);
                }
                if (!any) {
                    continue;
                }
                const ModuleId id{static_cast<int>(l), modules[k]};
                auto it = result.grads.modules.find(id);
                if (it != result.grads.modules.end()) {
                    auto& gm = it->second;
                    for (std::size_t i = 0; i < in.size(); ++i) {
                        const Scalar xi = in[i];
                        if (xi == Scalar(0)) {
                            continue;
                        }
                        Scalar* row = gm.weights.data() + i * width;
                        for (std::size_t j = 0; j < width; ++j) {
                            row[j] += xi * dz[j];
                        }
                    }
                    for (std::size_t j = 0; j < width; ++j) {
                        gm.bias[j] += dz[j];
                    }
                }
                if (l > 0) {
                    const auto& w = bank.module(id).weights;
                    for (std::size_t i = 0; i < width; ++i) {
                        Scalar acc = 0;
                        for (std::size_t j = 0; j < width; ++j) {
                            acc += w[i * width + j] * dz[j];
                        }
                        grad_in[i] += acc;
                    }
                }
            }
            if (l > 0) {
                std::swap(grad_out, grad_in);
            }
        }
    }
    result.loss = loss * inv_batch;
    return result;
}

template <class Scalar>
void sgd_step(BasicModuleBank<Scalar>& bank, const Gradients<Scalar>& grads, double learning_rate)
{
    const Scalar lr = static_cast<Scalar>(learning_rate);
    auto apply = [lr](Linear<Scalar>& param, const Linear<Scalar>& grad) {
        for (std::size_t i = 0; i < param.weights.size(); ++i) {
            param.weights[i] -= lr * grad.weights[i];
        }
        for (std::size_t i = 0; i < param.bias.size(); ++i) {
            param.bias[i] -= lr * grad.bias[i];
        }
    };
    // Validate everything before touching any parameter.
    for (const auto& [id, grad] : grads.modules) {
        if (!bank.module(id).same_shape(grad) || grad.weights.size() != bank.module(id).weights.size()) {
            throw Error("sgd_step: gradient shape mismatch for module (" + std::to_string(id.layer) + ", " +
                        std::to_string(id.index) + ")");
        }
        if (bank.is_frozen(id.layer, id.index)) {
            throw Error("sgd_step: gradient supplied for frozen module");
        }
    }
    Linear<Scalar>* head = nullptr;
    if (!grads.task.empty()) {
        head = &bank.head(grads.task);
        if (!head->same_shape(grads.head) || grads.head.weights.size() != head->weights.size()) {
            throw Error("sgd_step: gradient shape mismatch for head '" + grads.task + "'");
        }
    }
    for (const auto& [id, grad] : grads.modules) {
        apply(bank.module(id), grad);
    }
    if (head) {
        apply(*head, grads.head);
    }
}

template std::vector<double> forward<float>(const BasicModuleBank<float>&, const Genotype&,
                                            const std::optional<Genotype>&, std::span<const float>,
                                            const std::string&);
template std::vector<double> forward<double>(const BasicModuleBank<double>&, const Genotype&,
                                             const std::optional<Genotype>&, std::span<const double>,
                                             const std::string&);
template std::vector<std::vector<double>> forward_rows<float>(const BasicModuleBank<float>&, const Genotype&,
                                                              const std::optional<Genotype>&,
                                                              std::span<const float>, std::size_t,
                                                              const std::string&);
template std::vector<std::vector<double>> forward_rows<double>(const BasicModuleBank<double>&, const Genotype&,
                                                               const std::optional<Genotype>&,
                                                               std::span<const double>, std::size_t,
                                                               const std::string&);
template LossAndGrads<float> loss_and_grads<float>(const BasicModuleBank<float>&, const Genotype&,
                                                   const std::optional<Genotype>&, const Batch<float>&,
                                                   const std::string&);
template LossAndGrads<double> loss_and_grads<double>(const BasicModuleBank<double>&, const Genotype&,
                                                     const std::optional<Genotype>&, const Batch<double>&,
                                                     const std::string&);
template void sgd_step<float>(BasicModuleBank<float>&, const Gradients<float>&, double);
template void sgd_step<double>(BasicModuleBank<double>&, const Gradients<double>&, double);

}  // namespace pathnet
