#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pathnet/dataset.hpp"
#include "pathnet/genotype.hpp"
#include "pathnet/history.hpp"
#include "pathnet/hyper_params.hpp"
#include "pathnet/module_bank.hpp"
#include "pathnet/rng.hpp"

namespace pathnet {

/// Sub-streams derived from a run seed with Rng::derive.
enum RngStream : std::uint64_t {
    kBankStream = 1,
    kPopulationStream = 2,
    kHeadStream = 3,
};

struct FitnessRecord {
    Genotype genotype;
    /// Fraction of training samples predicted correctly, each batch scored
    /// before its own update.
    double accuracy = 0.0;
    std::size_t batches_seen = 0;
    std::size_t samples_seen = 0;
};

struct EvolutionState {
    std::vector<Genotype> population;
    /// Last recorded fitness per population slot; empty until evaluated.
    std::vector<std::optional<double>> fitness;
    int generation = 0;
    Rng rng;
    History history;
};

/// P random genotypes with genes uniform in [0, M-1]; `rng` then moves into
/// the state and drives all later draws of the run.
EvolutionState init_population(const HyperParams& hp, Rng rng);

struct Mutation {
    Genotype genotype;
    /// Genes selected for mutation (a zero delta still counts).
    int mutated_genes = 0;
};

/// Each gene independently, with probability mutation_prob, becomes
/// (gene + delta) mod M with delta uniform in [-range, range].
Mutation mutate(const Genotype& g, const HyperParams& hp, Rng& rng);

/// One pass of mini-batch SGD over a shuffled copy of `train`:
/// exactly ceil(|train| / B) steps. Trains `bank` in place.
FitnessRecord evaluate_pathway(ModuleBank& bank, const Genotype& g, const std::optional<Genotype>& pinned,
                               const Dataset& train, const HyperParams& hp, Rng& rng, const std::string& task);

struct TournamentResult {
    int first = 0;
    int second = 0;
    int winner = 0;
    int loser = 0;
    double winner_fitness = 0.0;
    double loser_fitness = 0.0;
    int mutated_genes = 0;
};

/// Scores a genotype. Receives the run's Rng so stochastic evaluators stay
/// reproducible.
using FitnessOracle = std::function<double(const Genotype&, Rng&)>;

/// Microbial tournament: draw two distinct slots, score the first then the
/// second, overwrite the loser (second on ties) with a mutated copy of the
/// winner. Appends to the history and advances the generation counter.
TournamentResult tournament_step(EvolutionState& state, const HyperParams& hp, const FitnessOracle& oracle);

struct EvolveOptions {
    std::string task_id = "task";
    /// Modules of this genotype join every forward pass (set union).
    std::optional<Genotype> pinned;
    /// Held-out set scored with the winner after each generation.
    const Dataset* probe = nullptr;
};

/// tournament_step where fitness is evaluate_pathway on `train`.
TournamentResult tournament_step(EvolutionState& state, ModuleBank& bank, const Dataset& train,
                                 const HyperParams& hp, const EvolveOptions& options);

struct BestPathway {
    Genotype genotype;
    int index = 0;
    double fitness = 0.0;
};

/// Highest recorded fitness, ties to the lowest slot. Throws when nothing
/// has been evaluated yet.
BestPathway best_pathway(const EvolutionState& state);

struct EvolutionResult {
    BestPathway best;
    ModuleBank bank;
    History history;
    EvolutionState state;
};

/// Fresh bank (seeded from hp.rng_seed) then evolve_on.
EvolutionResult evolve(const Dataset& train, const HyperParams& hp, const EvolveOptions& options = {});
/// Runs hp.generations tournaments on `bank`, creating the task head if needed.
EvolutionResult evolve_on(ModuleBank bank, const Dataset& train, const HyperParams& hp,
                          const EvolveOptions& options = {});

/// Posterior for every sample of `data`.
std::vector<std::vector<double>> predict(const ModuleBank& bank, const Genotype& g,
                                         const std::optional<Genotype>& pinned, const Dataset& data,
                                         const std::string& task);
double accuracy(const ModuleBank& bank, const Genotype& g, const std::optional<Genotype>& pinned,
                const Dataset& data, const std::string& task);

}  // namespace pathnet
