#pragma once

// Shared helpers and reference implementations for the test binaries.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <unistd.h>

#include "pathnet/module_bank.hpp"
#include "pathnet/network.hpp"
#include "pathnet/rng.hpp"

namespace testsupport {

/// Fresh empty directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag)
    {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("pathnet_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// Mean cross-entropy from the forward pass alone.
inline double reference_loss(const pathnet::BasicModuleBank<double>& bank, const pathnet::Genotype& g,
                             const std::optional<pathnet::Genotype>& pinned, const pathnet::Batch<double>& batch,
                             const std::string& task)
{
    double sum = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto p = pathnet::forward(bank, g, pinned, batch.row(i), task);
        sum -= std::log(p[static_cast<std::size_t>(batch.labels[i])]);
    }
    return sum / static_cast<double>(batch.size());
}

struct GradCheck {
    double max_rel_error = 0.0;
    std::size_t checked = 0;
};

/// Central finite differences over every parameter that has an analytic
/// gradient entry; also requires parameters without an entry to have a
/// zero numeric derivative when they are frozen.
inline GradCheck finite_difference_check(pathnet::BasicModuleBank<double> bank, const pathnet::Genotype& g,
                                         const std::optional<pathnet::Genotype>& pinned,
                                         const pathnet::Batch<double>& batch, const std::string& task,
                                         double eps = 1e-4)
{
    const auto analytic = pathnet::loss_and_grads(bank, g, pinned, batch, task);
    GradCheck out;
    auto compare = [&](double& param, double a) {
        const double saved = param;
        param = saved + eps;
        const double up = reference_loss(bank, g, pinned, batch, task);
        param = saved - eps;
        const double down = reference_loss(bank, g, pinned, batch, task);
        param = saved;
        const double numeric = (up - down) / (2.0 * eps);
        const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
        out.max_rel_error = std::max(out.max_rel_error, std::abs(a - numeric) / denom);
        ++out.checked;
    };
    for (const auto& [id, grad] : analytic.grads.modules) {
        auto& m = bank.module(id);
        for (std::size_t k = 0; k < m.weights.size(); ++k) {
            compare(m.weights[k], grad.weights[k]);
        }
        for (std::size_t k = 0; k < m.bias.size(); ++k) {
            compare(m.bias[k], grad.bias[k]);
        }
    }
    auto& head = bank.head(task);
    for (std::size_t k = 0; k < head.weights.size(); ++k) {
        compare(head.weights[k], analytic.grads.head.weights[k]);
    }
    for (std::size_t k = 0; k < head.bias.size(); ++k) {
        compare(head.bias[k], analytic.grads.head.bias[k]);
    }
    return out;
}

/// Fraction of (positive, negative) pairs ordered correctly, ties counted half.
inline double mann_whitney(const std::vector<double>& scores, const std::vector<int>& truths)
{
    double concordant = 0.0;
    double pairs = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (truths[i] != 1) {
            continue;
        }
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (truths[j] != 0) {
                continue;
            }
            pairs += 1.0;
            if (scores[i] > scores[j]) {
                concordant += 1.0;
            } else if (scores[i] == scores[j]) {
                concordant += 0.5;
            }
        }
    }
    return concordant / pairs;
}

/// Frame starts enumerated one by one.
inline std::size_t brute_frames(std::size_t samples, std::size_t win, std::size_t hop)
{
    std::size_t n = 0;
    for (std::size_t start = 0; start + win <= samples; start += hop) {
        ++n;
    }
    return n;
}

inline std::size_t brute_segments(std::size_t frames, std::size_t len, std::size_t hop)
{
    if (frames < len) {
        return 1;
    }
    std::size_t n = 0;
    for (std::size_t start = 0; start + len <= frames; start += hop) {
        ++n;
    }
    return n;
}

/// Upper-tail probability of a chi-square variable (regularized gamma Q).
inline double chi_square_p(double x, int dof)
{
    const double a = dof / 2.0;
    const double z = x / 2.0;
    if (z < a + 1.0) {
        double sum = 1.0 / a;
        double term = sum;
        for (int n = 1; n < 500; ++n) {
            term *= z / (a + n);
            sum += term;
        }
        return 1.0 - sum * std::exp(-z + a * std::log(z) - std::lgamma(a));
    }
    // Continued fraction (Lentz).
    double b = z + 1.0 - a;
    double c = 1e300;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        d = std::abs(d) < 1e-300 ? 1e-300 : d;
        c = b + an / c;
        c = std::abs(c) < 1e-300 ? 1e-300 : c;
        d = 1.0 / d;
        h *= d * c;
    }
    return std::exp(-z + a * std::log(z) - std::lgamma(a)) * h;
}

/// Small random architecture with at most `max_params` bank + head parameters.
inline pathnet::HyperParams random_small_hp(pathnet::Rng& rng, std::size_t max_params = 200)
{
    while (true) {
        pathnet::HyperParams hp;
        hp.num_layers = rng.uniform_int(1, 3);
        hp.modules_per_layer = rng.uniform_int(2, 4);
        hp.module_width = rng.uniform_int(2, 4);
        hp.max_active_per_layer = rng.uniform_int(1, hp.modules_per_layer);
        hp.input_dim = rng.uniform_int(2, 6);
        hp.batch_size = 4;
        hp.population_size = 2;
        std::size_t total = 0;
        for (int l = 0; l < hp.num_layers; ++l) {
            total += static_cast<std::size_t>(hp.modules_per_layer) *
                     static_cast<std::size_t>(hp.in_dim(l) * hp.module_width + hp.module_width);
        }
        total += static_cast<std::size_t>(hp.module_width * 4 + 4);
        if (total <= max_params) {
            return hp;
        }
    }
}

/// Random biases so no pre-activation sits exactly on the ReLU kink
/// (zero-initialized biases behind a dead layer would).
template <class Scalar>
void randomize_biases(pathnet::BasicModuleBank<Scalar>& bank, pathnet::Rng& rng)
{
    const auto& hp = bank.hyper_params();
    for (int l = 0; l < hp.num_layers; ++l) {
        for (int m = 0; m < hp.modules_per_layer; ++m) {
            for (auto& b : bank.module(l, m).bias) {
                b = static_cast<Scalar>(rng.uniform(-0.5, 0.5));
            }
        }
    }
    for (auto& [task, head] : bank.heads()) {
        for (auto& b : head.bias) {
            b = static_cast<Scalar>(rng.uniform(-0.5, 0.5));
        }
    }
}

inline pathnet::Genotype random_genotype(const pathnet::HyperParams& hp, pathnet::Rng& rng)
{
    pathnet::Genotype g(hp.num_layers, hp.max_active_per_layer);
    for (int& gene : g.genes()) {
        gene = rng.uniform_int(0, hp.modules_per_layer - 1);
    }
    return g;
}

}  // namespace testsupport

#include "pathnet/dataset.hpp"

namespace testsupport {

/// Gaussian blobs: class c centred at `separation` along axis c.
inline pathnet::Dataset blobs(int classes, int per_class, int dim, double separation, double noise,
                              std::uint64_t seed)
{
    pathnet::Rng rng(seed);
    pathnet::Dataset d;
    d.name = "blobs";
    d.dim = static_cast<std::size_t>(dim);
    for (int c = 0; c < classes; ++c) {
        d.classes.push_back("c" + std::to_string(c));
    }
    std::size_t row = 0;
    for (int n = 0; n < per_class; ++n) {
        for (int c = 0; c < classes; ++c) {
            std::vector<float> x(static_cast<std::size_t>(dim));
            for (int k = 0; k < dim; ++k) {
                x[static_cast<std::size_t>(k)] =
                    static_cast<float>((k == c % dim ? separation : 0.0) + noise * rng.normal());
            }
            d.add_sample(x, c, "s" + std::to_string(n % 3), "u" + std::to_string(row), row);
            ++row;
        }
    }
    return d;
}

}  // namespace testsupport
