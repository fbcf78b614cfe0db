#include "pathnet/evolution.hpp"

#include <numeric>

#include "pathnet/error.hpp"
#include "pathnet/network.hpp"

namespace pathnet {

EvolutionState init_population(const HyperParams& hp, Rng rng)
{
    hp.validate();
    EvolutionState state;
    state.population.reserve(static_cast<std::size_t>(hp.population_size));
    for (int p = 0; p < hp.population_size; ++p) {
        Genotype g(hp.num_layers, hp.max_active_per_layer);
        for (int& gene : g.genes()) {
            gene = rng.uniform_int(0, hp.modules_per_layer - 1);
        }
        state.population.push_back(std::move(g));
    }
    state.fitness.assign(state.population.size(), std::nullopt);
    state.rng = std::move(rng);
    return state;
}

Mutation mutate(const Genotype& g, const HyperParams& hp, Rng& rng)
{
    g.validate(hp);
    const double p = hp.effective_mutation_prob();
    const int modules = hp.modules_per_layer;
    Mutation out{g, 0};
    for (int& gene : out.genotype.genes()) {
        if (!rng.bernoulli(p)) {
            continue;
        }
        const int delta = rng.uniform_int(-hp.mutation_range, hp.mutation_range);
        gene = ((gene + delta) % modules + modules) % modules;
        ++out.mutated_genes;
    }
    return out;
}

FitnessRecord evaluate_pathway(ModuleBank& bank, const Genotype& g, const std::optional<Genotype>& pinned,
                               const Dataset& train, const HyperParams& hp, Rng& rng, const std::string& task)
{
    if (train.empty()) {
        throw DataError("cannot evaluate a pathway on an empty training set");
    }
    if (train.dim != static_cast<std::size_t>(hp.input_dim)) {
        throw DataError("training samples have dimension " + std::to_string(train.dim) + ", network expects " +
                        std::to_string(hp.input_dim));
    }
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));

    const auto batch_size = static_cast<std::size_t>(hp.batch_size);
    FitnessRecord record{g, 0.0, 0, 0};
    std::size_t correct = 0;
    Batch<float> batch;
    batch.input_dim = hp.input_dim;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
        const std::size_t end = std::min(order.size(), start + batch_size);
        batch.inputs.clear();
        batch.labels.clear();
        for (std::size_t k = start; k < end; ++k) {
            auto x = train.sample(order[k]);
            batch.inputs.insert(batch.inputs.end(), x.begin(), x.end());
            batch.labels.push_back(train.label(order[k]));
        }
        auto result = loss_and_grads(bank, g, pinned, batch, task);
        correct += result.correct;
        sgd_step(bank, result.grads, hp.learning_rate);
        ++record.batches_seen;
        record.samples_seen += end - start;
    }
    record.accuracy = static_cast<double>(correct) / static_cast<double>(record.samples_seen);
    return record;
}

TournamentResult tournament_step(EvolutionState& state, const HyperParams& hp, const FitnessOracle& oracle)
{
    if (state.generation >= hp.generations) {
        throw Error("tournament_step: generation budget of " + std::to_string(hp.generations) + " exhausted");
    }
    const std::size_t size = state.population.size();
    if (size < 2 || state.fitness.size() != size) {
        throw Error("tournament_step: population needs at least two members");
    }
    TournamentResult r;
    r.first = static_cast<int>(state.rng.uniform_index(size));
    std::size_t second = state.rng.uniform_index(size - 1);
    if (second >= static_cast<std::size_t>(r.first)) {
        ++second;
    }
    r.second = static_cast<int>(second);

    const double f1 = oracle(state.population[static_cast<std::size_t>(r.first)], state.rng);
    const double f2 = oracle(state.population[second], state.rng);
    const bool first_wins = f1 >= f2;
    r.winner = first_wins ? r.first : r.second;
    r.loser = first_wins ? r.second : r.first;
    r.winner_fitness = first_wins ? f1 : f2;
    r.loser_fitness = first_wins ? f2 : f1;

    const auto w = static_cast<std::size_t>(r.winner);
    const auto l = static_cast<std::size_t>(r.loser);
    state.fitness[w] = r.winner_fitness;
    Mutation child = mutate(state.population[w], hp, state.rng);
    r.mutated_genes = child.mutated_genes;
    state.population[l] = std::move(child.genotype);
    // The mutated copy has not been evaluated yet.
    state.fitness[l] = std::nullopt;

    ++state.generation;
    state.history.push_back({state.generation, r.winner, r.winner_fitness, r.loser_fitness, std::nullopt});
    return r;
}

TournamentResult tournament_step(EvolutionState& state, ModuleBank& bank, const Dataset& train,
                                 const HyperParams& hp, const EvolveOptions& options)
{
    auto oracle = [&](const Genotype& g, Rng& rng) {
        return evaluate_pathway(bank, g, options.pinned, train, hp, rng, options.task_id).accuracy;
    };
    TournamentResult r = tournament_step(state, hp, oracle);
    if (options.probe != nullptr && !options.probe->empty()) {
        // The winner slot still holds the unmutated winner.
        state.history.back().test_accuracy =
            accuracy(bank, state.population[static_cast<std::size_t>(r.winner)], options.pinned, *options.probe,
                     options.task_id);
    }
    return r;
}

BestPathway best_pathway(const EvolutionState& state)
{
    std::optional<BestPathway> best;
    for (std::size_t i = 0; i < state.population.size(); ++i) {
        const auto& f = state.fitness[i];
        if (f && (!best || *f > best->fitness)) {
            best = BestPathway{state.population[i], static_cast<int>(i), *f};
        }
    }
    if (!best) {
        throw Error("no fitness recorded: the population was never evaluated");
    }
    return *best;
}

EvolutionResult evolve(const Dataset& train, const HyperParams& hp, const EvolveOptions& options)
{
    hp.validate();
    Rng bank_rng = Rng::derive(hp.rng_seed, kBankStream);
    return evolve_on(init_params<float>(hp, bank_rng), train, hp, options);
}

EvolutionResult evolve_on(ModuleBank bank, const Dataset& train, const HyperParams& hp, const EvolveOptions& options)
{
    hp.validate();
    if (train.empty()) {
        throw DataError("cannot evolve on an empty dataset");
    }
    if (train.classes.empty()) {
        throw DataError("dataset '" + train.name + "' declares no classes");
    }
    if (options.pinned) {
        options.pinned->validate(hp);
    }
    const int classes = static_cast<int>(train.classes.size());
    if (!bank.has_head(options.task_id)) {
        Rng head_rng = Rng::derive(hp.rng_seed, kHeadStream);
        add_head(bank, options.task_id, classes, head_rng);
    } else if (bank.head(options.task_id).out_dim != classes) {
        throw DataError("head of task '" + options.task_id + "' has " +
                        std::to_string(bank.head(options.task_id).out_dim) + " classes, dataset has " +
                        std::to_string(classes));
    }

    EvolutionState state = init_population(hp, Rng::derive(hp.rng_seed, kPopulationStream));
    while (state.generation < hp.generations) {
        tournament_step(state, bank, train, hp, options);
    }
    BestPathway best = best_pathway(state);
    History history = state.history;
    return EvolutionResult{std::move(best), std::move(bank), std::move(history), std::move(state)};
}

std::vector<std::vector<double>> predict(const ModuleBank& bank, const Genotype& g,
                                         const std::optional<Genotype>& pinned, const Dataset& data,
                                         const std::string& task)
{
    return forward_rows(bank, g, pinned, data.features(), data.size(), task);
}

double accuracy(const ModuleBank& bank, const Genotype& g, const std::optional<Genotype>& pinned,
                const Dataset& data, const std::string& task)
{
    if (data.empty()) {
        throw DataError("accuracy of an empty dataset is undefined");
    }
    const auto posteriors = predict(bank, g, pinned, data, task);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < posteriors.size(); ++i) {
        if (argmax(posteriors[i]) == static_cast<std::size_t>(data.label(i))) {
            ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace pathnet
