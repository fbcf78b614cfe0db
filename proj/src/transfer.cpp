#include "pathnet/transfer.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "pathnet/error.hpp"

namespace pathnet {

std::vector<std::string> shared_classes(const std::vector<std::vector<std::string>>& class_lists)
{
    if (class_lists.empty()) {
        return {};
    }
    std::vector<std::string> out;
    for (const auto& c : class_lists.front()) {
        bool everywhere = std::all_of(class_lists.begin() + 1, class_lists.end(), [&](const auto& list) {
            return std::find(list.begin(), list.end(), c) != list.end();
        });
        if (everywhere) {
            out.push_back(c);
        }
    }
    return out;
}

Dataset restrict_to_classes(const Dataset& data, const std::vector<std::string>& keep)
{
    std::vector<std::size_t> indices;
    std::vector<int> labels;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& name = data.classes[static_cast<std::size_t>(data.label(i))];
        auto it = std::find(keep.begin(), keep.end(), name);
        if (it != keep.end()) {
            indices.push_back(i);
            labels.push_back(static_cast<int>(it - keep.begin()));
        }
    }
    Dataset out = data.subset(indices);
    out.classes = keep;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out.relabel(i, labels[i]);
    }
    return out;
}

Dataset join_sources(const std::vector<Dataset>& datasets, const std::vector<std::string>& shared)
{
    if (datasets.empty()) {
        throw DataError("join_sources: no source datasets");
    }
    Dataset out;
    out.classes = shared;
    out.dim = datasets.front().dim;
    out.channels = datasets.front().channels;
    std::string name;
    std::size_t row_offset = 0;
    for (const auto& d : datasets) {
        name += (name.empty() ? "" : "+") + d.name;
        if (d.dim != out.dim || d.channels != out.channels) {
            throw DataError("join_sources: dataset '" + d.name + "' has a different sample shape");
        }
        std::vector<int> mapping;
        for (const auto& c : d.classes) {
            auto it = std::find(shared.begin(), shared.end(), c);
            mapping.push_back(it == shared.end() ? -1 : static_cast<int>(it - shared.begin()));
        }
        std::size_t max_row = 0;
        for (std::size_t i = 0; i < d.size(); ++i) {
            const int label = mapping[static_cast<std::size_t>(d.label(i))];
            if (label < 0) {
                throw DataError("join_sources: label '" + d.classes[static_cast<std::size_t>(d.label(i))] +
                                "' of dataset '" + d.name + "' is not in the shared label space");
            }
            out.add_sample(d.sample(i), label, d.name + ":" + d.subject(i), d.utterance(i), row_offset + d.row(i));
            max_row = std::max(max_row, d.row(i) + 1);
        }
        row_offset += max_row;
    }
    out.name = name;
    return out;
}

namespace {

void check_same_architecture(const HyperParams& a, const HyperParams& b)
{
    if (a.num_layers != b.num_layers || a.modules_per_layer != b.modules_per_layer ||
        a.module_width != b.module_width || a.max_active_per_layer != b.max_active_per_layer ||
        a.input_dim != b.input_dim) {
        throw ConfigError("source and destination hyperparameters describe different architectures");
    }
}

Dataset with_label_space(const Dataset& data, const std::vector<std::string>& space)
{
    if (space.empty() || space == data.classes) {
        return data;
    }
    Dataset out = data;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto& name = data.classes[static_cast<std::size_t>(data.label(i))];
        auto it = std::find(space.begin(), space.end(), name);
        if (it == space.end()) {
            throw DataError("label '" + name + "' of dataset '" + data.name + "' is not in the destination label space");
        }
        out.relabel(i, static_cast<int>(it - space.begin()));
    }
    out.classes = space;
    return out;
}

}  // namespace

std::vector<FrozenChecksum> path_checksums(const ModuleBank& bank, const Genotype& g)
{
    std::vector<FrozenChecksum> out;
    const ActiveSet active = active_modules(g);
    for (std::size_t l = 0; l < active.size(); ++l) {
        for (int m : active[l]) {
            const ModuleId id{static_cast<int>(l), m};
            out.push_back({id, module_checksum(bank.module(id))});
        }
    }
    return out;
}

bool DestinationOutcome::frozen_intact() const
{
    if (frozen_pre.size() != frozen_post.size()) {
        return false;
    }
    for (std::size_t i = 0; i < frozen_pre.size(); ++i) {
        if (frozen_pre[i].module != frozen_post[i].module || frozen_pre[i].checksum != frozen_post[i].checksum) {
            return false;
        }
    }
    return true;
}

SourceOutcome run_source_phase(const TransferPlan& plan)
{
    if (plan.sources.empty()) {
        throw ConfigError("transfer plan needs at least one source dataset");
    }
    const auto shared = plan.shared_label_space.empty() ? plan.sources.front().classes : plan.shared_label_space;
    const Dataset joined = join_sources(plan.sources, shared);
    HyperParams hp = plan.hp_source;
    hp.rng_seed = plan.seeds.source;
    EvolveOptions options;
    options.task_id = kSourceTask;
    EvolutionResult r = evolve(joined, hp, options);
    return SourceOutcome{std::move(r.best), std::move(r.bank), std::move(r.history)};
}

EvolutionResult scratch_baseline(const Dataset& train, HyperParams hp, std::uint64_t seed, const Dataset* probe)
{
    hp.rng_seed = seed;
    EvolveOptions options;
    options.task_id = kDestinationTask;
    options.probe = probe;
    return evolve(train, hp, options);
}

DestinationOutcome run_destination_phase(const SourceOutcome& source, const TransferPlan& plan)
{
    plan.hp_dest.validate();
    check_same_architecture(source.bank.hyper_params(), plan.hp_dest);
    const Dataset train = with_label_space(plan.destination_train, plan.destination_label_space);
    const Dataset test = plan.destination_test.empty()
                             ? plan.destination_test
                             : with_label_space(plan.destination_test, train.classes);
    const Dataset* probe = test.empty() ? nullptr : &test;
    const Genotype& keep = source.best.genotype;

    DestinationOutcome out;
    out.frozen_pre = path_checksums(source.bank, keep);

    HyperParams hp = plan.hp_dest;
    hp.rng_seed = plan.seeds.destination;
    Rng rng = Rng::derive(hp.rng_seed, kBankStream);
    ModuleBank bank = reinit_except(source.bank, keep, rng);
    bank.retune(hp);

    EvolveOptions options;
    options.task_id = kDestinationTask;
    options.pinned = keep;
    options.probe = probe;
    out.transfer.result = evolve_on(std::move(bank), train, hp, options);
    out.transfer.pinned = keep;
    out.frozen_post = path_checksums(out.transfer.result.bank, keep);

    out.scratch.result = scratch_baseline(train, plan.hp_dest, plan.seeds.baseline, probe);

    if (probe) {
        out.transfer.evaluation = evaluate_on(out.transfer.result.bank, out.transfer.result.best.genotype, keep,
                                              test, kDestinationTask);
        out.scratch.evaluation = evaluate_on(out.scratch.result.bank, out.scratch.result.best.genotype,
                                             std::nullopt, test, kDestinationTask);
    }
    return out;
}

TransferOutcome run_transfer(const TransferPlan& plan)
{
    SourceOutcome source = run_source_phase(plan);
    DestinationOutcome destination = run_destination_phase(source, plan);
    return TransferOutcome{std::move(source), std::move(destination)};
}

namespace {

nlohmann::json checksums_json(const std::vector<FrozenChecksum>& sums)
{
    nlohmann::json out = nlohmann::json::array();
    for (const auto& s : sums) {
        char hex[17];
        std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(s.checksum));
        out.push_back({{"layer", s.module.layer}, {"module", s.module.index}, {"fnv1a64", hex}});
    }
    return out;
}

nlohmann::json run_summary(const DestinationRun& run)
{
    nlohmann::json j{{"best_genotype", run.result.best.genotype},
                     {"best_fitness", run.result.best.fitness},
                     {"best_index", run.result.best.index},
                     {"final_winner_fitness", run.result.history.empty() ? nlohmann::json(nullptr)
                                                                         : nlohmann::json(run.result.history.back().winner_fitness)}};
    if (run.evaluation) {
        j["eval"] = {{"segment", {{"war", run.evaluation->segments.war}, {"uar", run.evaluation->segments.uar}, {"uap", run.evaluation->segments.uap}}},
                     {"utterance", {{"war", run.evaluation->utterances.war}, {"uar", run.evaluation->utterances.uar}, {"uap", run.evaluation->utterances.uap}}}};
    } else {
        j["eval"] = nullptr;
    }
    return j;
}

}  // namespace

nlohmann::json transfer_report(const SourceOutcome& source, const DestinationOutcome& destination,
                               const nlohmann::json& curves)
{
    return {{"source_best_genotype", source.best.genotype},
            {"source_best_fitness", source.best.fitness},
            {"dest_best_genotype", destination.transfer.result.best.genotype},
            {"frozen_module_checksums",
             {{"pre", checksums_json(destination.frozen_pre)},
              {"post", checksums_json(destination.frozen_post)},
              {"intact", destination.frozen_intact()}}},
            {"curves", curves},
            {"eval_summaries", {{"transfer", run_summary(destination.transfer)}, {"scratch", run_summary(destination.scratch)}}}};
}

}  // namespace pathnet
