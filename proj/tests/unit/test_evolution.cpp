#include <doctest.h>

#include <cmath>
#include <set>

#include "pathnet/error.hpp"
#include "pathnet/evolution.hpp"
#include "pathnet/network.hpp"
#include "support.hpp"

using namespace pathnet;

namespace {

HyperParams small_hp(int input_dim)
{
    HyperParams hp;
    hp.input_dim = input_dim;
    hp.population_size = 6;
    hp.generations = 30;
    hp.batch_size = 16;
    return hp;
}

int hamming(const Genotype& a, const Genotype& b)
{
    int d = 0;
    for (std::size_t i = 0; i < a.genes().size(); ++i) {
        d += a.genes()[i] != b.genes()[i];
    }
    return d;
}

bool reachable(int from, int to, const HyperParams& hp)
{
    for (int delta = -hp.mutation_range; delta <= hp.mutation_range; ++delta) {
        if (((from + delta) % hp.modules_per_layer + hp.modules_per_layer) % hp.modules_per_layer == to) {
            return true;
        }
    }
    return false;
}

}  // namespace

TEST_CASE("initial population shape and range")
{
    HyperParams hp;
    const auto state = init_population(hp, Rng(1));
    CHECK(state.population.size() == 20);
    CHECK(state.generation == 0);
    for (const auto& g : state.population) {
        CHECK(g.layers() == 3);
        CHECK(g.genes_per_layer() == 4);
        for (int gene : g.genes()) {
            CHECK(gene >= 0);
            CHECK(gene <= 19);
        }
    }
    for (const auto& f : state.fitness) {
        CHECK_FALSE(f.has_value());
    }
    CHECK(init_population(hp, Rng(1)).population == state.population);
    CHECK_FALSE(init_population(hp, Rng(2)).population == state.population);
}

TEST_CASE("initial genes pass a chi-square uniformity test")
{
    HyperParams hp;
    hp.population_size = 8334;  // 100,008 genes
    const auto state = init_population(hp, Rng(123));
    std::vector<double> counts(20, 0.0);
    double n = 0.0;
    for (const auto& g : state.population) {
        for (int gene : g.genes()) {
            counts[static_cast<std::size_t>(gene)] += 1.0;
            n += 1.0;
        }
    }
    double chi = 0.0;
    for (double c : counts) {
        chi += (c - n / 20.0) * (c - n / 20.0) / (n / 20.0);
    }
    CHECK(testsupport::chi_square_p(chi, 19) > 0.001);
}

TEST_CASE("mutation with probability zero is the identity")
{
    HyperParams hp;
    hp.mutation_prob = 0.0;
    Rng rng(4);
    const Genotype g({{0, 5, 19, 3}, {1, 1, 1, 1}, {7, 8, 9, 10}});
    for (int i = 0; i < 100; ++i) {
        const auto m = mutate(g, hp, rng);
        CHECK(m.genotype == g);
        CHECK(m.mutated_genes == 0);
    }
}

TEST_CASE("mutation wraps around the module range")
{
    HyperParams hp;
    hp.mutation_prob = 1.0;
    Rng rng(5);
    const Genotype g({{19, 19, 19, 19}, {0, 0, 0, 0}, {10, 10, 10, 10}});
    std::set<int> from_top;
    std::set<int> from_zero;
    for (int i = 0; i < 500; ++i) {
        const auto m = mutate(g, hp, rng);
        CHECK(m.mutated_genes == 12);
        for (int s = 0; s < 4; ++s) {
            from_top.insert(m.genotype.at(0, s));
            from_zero.insert(m.genotype.at(1, s));
        }
    }
    CHECK(from_top == std::set<int>{17, 18, 19, 0, 1});
    CHECK(from_zero == std::set<int>{18, 19, 0, 1, 2});
}

TEST_CASE("mean mutated gene count is one")
{
    HyperParams hp;
    Rng rng(6);
    const Genotype g({{0, 1, 2, 3}, {4, 5, 6, 7}, {8, 9, 10, 11}});
    double total = 0.0;
    const int trials = 100000;
    for (int i = 0; i < trials; ++i) {
        total += mutate(g, hp, rng).mutated_genes;
    }
    CHECK(std::abs(total / trials - 1.0) <= 0.03);
}

TEST_CASE("evaluate_pathway runs ceil(n/B) steps")
{
    auto data = testsupport::blobs(2, 320, 8, 2.0, 0.5, 1);
    HyperParams hp = small_hp(8);
    hp.batch_size = 64;
    Rng rng(7);
    auto bank = init_params<float>(hp, rng);
    add_head(bank, "task", 2, rng);
    const Genotype g({{0, 1, 2, 3}, {0, 1, 2, 3}, {0, 1, 2, 3}});
    auto rec = evaluate_pathway(bank, g, std::nullopt, data, hp, rng, "task");
    CHECK(data.size() == 640);
    CHECK(rec.batches_seen == 10);
    CHECK(rec.samples_seen == 640);

    std::vector<std::size_t> idx(650 - 0);
    auto bigger = testsupport::blobs(2, 325, 8, 2.0, 0.5, 2);
    rec = evaluate_pathway(bank, g, std::nullopt, bigger, hp, rng, "task");
    CHECK(rec.batches_seen == 11);
    CHECK(rec.samples_seen == 650);
    CHECK(rec.accuracy >= 0.0);
    CHECK(rec.accuracy <= 1.0);

    Dataset empty;
    empty.dim = 8;
    CHECK_THROWS_AS(evaluate_pathway(bank, g, std::nullopt, empty, hp, rng, "task"), DataError);
}

TEST_CASE("an untrained network scores near chance")
{
    // Inputs carry no class signal, and every sample is scored before the
    // update that sees it, so one pass cannot beat chance.
    const int classes = 4;
    auto data = testsupport::blobs(classes, 500, 8, 0.0, 1.0, 3);
    HyperParams hp = small_hp(8);
    hp.batch_size = 50;
    Rng rng(8);
    auto bank = init_params<float>(hp, rng);
    add_head(bank, "task", classes, rng);
    const Genotype g({{0, 1, 2, 3}, {0, 1, 2, 3}, {0, 1, 2, 3}});
    const auto rec = evaluate_pathway(bank, g, std::nullopt, data, hp, rng, "task");
    const double n = static_cast<double>(data.size());
    const double p = 1.0 / classes;
    CHECK(std::abs(rec.accuracy - p) <= 3.0 * std::sqrt(p * (1.0 - p) / n));
}

TEST_CASE("warm-started network on separable blobs reaches fitness 1")
{
    auto data = testsupport::blobs(2, 100, 8, 3.0, 0.2, 4);
    HyperParams hp = small_hp(8);
    hp.learning_rate = 0.1;
    Rng rng(9);
    auto bank = init_params<float>(hp, rng);
    add_head(bank, "task", 2, rng);
    const Genotype g({{0, 1, 2, 3}, {0, 1, 2, 3}, {0, 1, 2, 3}});
    for (int warm = 0; warm < 20; ++warm) {
        evaluate_pathway(bank, g, std::nullopt, data, hp, rng, "task");
    }
    CHECK(evaluate_pathway(bank, g, std::nullopt, data, hp, rng, "task").accuracy == 1.0);
}

TEST_CASE("tournament overwrites the loser with a copy of the winner")
{
    HyperParams hp;
    hp.mutation_prob = 0.0;
    hp.population_size = 2;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto state = init_population(hp, Rng(seed));
        const auto before = state.population;
        REQUIRE_FALSE(before[0] == before[1]);
        const auto r = tournament_step(state, hp, [&](const Genotype& g, Rng&) { return g == before[0] ? 0.9 : 0.4; });
        CHECK(r.winner == 0);
        CHECK(r.loser == 1);
        CHECK(r.winner_fitness == 0.9);
        CHECK(r.loser_fitness == 0.4);
        CHECK(state.population[1] == before[0]);
        CHECK(state.population[0] == before[0]);
        CHECK(state.generation == 1);
        REQUIRE(state.history.size() == 1);
        CHECK(state.history[0].generation == 1);
        CHECK(state.history[0].winner_index == 0);
        CHECK(state.fitness[0] == 0.9);
        CHECK_FALSE(state.fitness[1].has_value());
    }
}

TEST_CASE("ties make the second drawn slot lose")
{
    HyperParams hp;
    hp.mutation_prob = 0.0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto state = init_population(hp, Rng(seed));
        const auto before = state.population;
        const auto r = tournament_step(state, hp, [](const Genotype&, Rng&) { return 0.7; });
        CHECK(r.first != r.second);
        CHECK(r.winner == r.first);
        CHECK(r.loser == r.second);
        CHECK(state.population[static_cast<std::size_t>(r.second)] == before[static_cast<std::size_t>(r.first)]);
    }
}

TEST_CASE("tournament respects the generation budget")
{
    HyperParams hp;
    hp.generations = 2;
    auto state = init_population(hp, Rng(1));
    auto oracle = [](const Genotype&, Rng&) { return 0.5; };
    tournament_step(state, hp, oracle);
    tournament_step(state, hp, oracle);
    CHECK_THROWS_AS(tournament_step(state, hp, oracle), Error);
}

TEST_CASE("loser is always a one-step mutation of the winner")
{
    HyperParams hp;
    hp.mutation_prob = 0.3;
    hp.generations = 500;
    auto state = init_population(hp, Rng(11));
    Rng scores(12);
    for (int gen = 0; gen < 500; ++gen) {
        const auto before = state.population;
        const auto r = tournament_step(state, hp, [&](const Genotype&, Rng&) { return scores.uniform01(); });
        CHECK(state.population.size() == 20);
        const auto& winner = before[static_cast<std::size_t>(r.winner)];
        const auto& child = state.population[static_cast<std::size_t>(r.loser)];
        for (std::size_t i = 0; i < winner.genes().size(); ++i) {
            CHECK(reachable(winner.genes()[i], child.genes()[i], hp));
        }
        CHECK(r.winner_fitness >= r.loser_fitness);
    }
}

TEST_CASE("two evaluations per generation and 2GT steps in total")
{
    auto data = testsupport::blobs(2, 40, 8, 2.0, 0.5, 5);  // 80 samples
    HyperParams hp = small_hp(8);
    hp.batch_size = 16;  // T = 5
    hp.generations = 12;
    Rng rng(13);
    auto bank = init_params<float>(hp, rng);
    add_head(bank, "task", 2, rng);
    auto state = init_population(hp, Rng(14));
    std::size_t evaluations = 0;
    std::size_t steps = 0;
    FitnessOracle oracle = [&](const Genotype& g, Rng& r) {
        ++evaluations;
        const auto rec = evaluate_pathway(bank, g, std::nullopt, data, hp, r, "task");
        steps += rec.batches_seen;
        return rec.accuracy;
    };
    while (state.generation < hp.generations) {
        tournament_step(state, hp, oracle);
    }
    CHECK(evaluations == 24);
    CHECK(steps == 2 * 12 * 5);
}

TEST_CASE("zero-mutation takeover by the fittest genotype")
{
    HyperParams hp;
    hp.mutation_prob = 0.0;
    const int budget = static_cast<int>(std::ceil(10.0 * hp.population_size * std::log(hp.population_size)));
    hp.generations = budget;
    int uniform = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto state = init_population(hp, Rng::derive(seed, 2));
        const Genotype target = state.population[seed % state.population.size()];
        const double genes = static_cast<double>(target.size());
        auto oracle = [&](const Genotype& g, Rng&) { return 1.0 - hamming(g, target) / genes; };
        while (state.generation < hp.generations) {
            tournament_step(state, hp, oracle);
            if (std::all_of(state.population.begin(), state.population.end(),
                            [&](const Genotype& g) { return g == state.population.front(); })) {
                break;
            }
        }
        uniform += std::all_of(state.population.begin(), state.population.end(),
                               [&](const Genotype& g) { return g == target; });
    }
    CHECK(uniform >= 99);
}

TEST_CASE("best pathway picks the highest fitness, ties to the lowest slot")
{
    HyperParams hp;
    auto state = init_population(hp, Rng(1));
    CHECK_THROWS_WITH(best_pathway(state), doctest::Contains("no fitness recorded"));
    state.fitness[3] = 0.8;
    state.fitness[7] = 0.9;
    state.fitness[12] = 0.9;
    const auto best = best_pathway(state);
    CHECK(best.index == 7);
    CHECK(best.fitness == 0.9);
    CHECK(best.genotype == state.population[7]);
}

TEST_CASE("evolve with zero generations has nothing to report")
{
    auto data = testsupport::blobs(2, 10, 8, 2.0, 0.5, 6);
    HyperParams hp = small_hp(8);
    hp.generations = 0;
    CHECK_THROWS_WITH(evolve(data, hp), doctest::Contains("no fitness recorded"));
}

TEST_CASE("evolution solves a separable task as well as a fixed pathway")
{
    auto data = testsupport::blobs(3, 40, 16, 3.0, 0.5, 7);
    HyperParams hp = small_hp(16);
    hp.rng_seed = 99;

    // Reference: one fixed pathway trained by plain SGD for the same number of passes.
    Rng rng(100);
    auto bank = init_params<float>(hp, rng);
    add_head(bank, "task", 3, rng);
    const Genotype fixed({{0, 1, 2, 3}, {0, 1, 2, 3}, {0, 1, 2, 3}});
    for (int pass = 0; pass < 2 * hp.generations; ++pass) {
        evaluate_pathway(bank, fixed, std::nullopt, data, hp, rng, "task");
    }
    CHECK(accuracy(bank, fixed, std::nullopt, data, "task") >= 0.95);

    const auto result = evolve(data, hp);
    CHECK(result.best.fitness >= 0.95);
    CHECK(result.history.size() == 30);
    for (const auto& h : result.history) {
        CHECK(h.winner_fitness >= 0.0);
        CHECK(h.winner_fitness <= 1.0);
        CHECK(h.loser_fitness <= h.winner_fitness);
    }
}

TEST_CASE("evolution is deterministic and probes fill test accuracy")
{
    auto data = testsupport::blobs(2, 30, 8, 2.0, 0.8, 8);
    auto probe = testsupport::blobs(2, 10, 8, 2.0, 0.8, 9);
    HyperParams hp = small_hp(8);
    hp.generations = 10;
    hp.rng_seed = 5;
    EvolveOptions options;
    options.probe = &probe;
    const auto a = evolve(data, hp, options);
    const auto b = evolve(data, hp, options);
    CHECK(a.best.genotype == b.best.genotype);
    CHECK(a.history == b.history);
    CHECK(a.bank == b.bank);
    for (const auto& h : a.history) {
        REQUIRE(h.test_accuracy.has_value());
        CHECK(*h.test_accuracy >= 0.0);
        CHECK(*h.test_accuracy <= 1.0);
    }
    const auto plain = evolve(data, hp);
    CHECK_FALSE(plain.history.front().test_accuracy.has_value());
    CHECK(plain.history.size() == a.history.size());
}

TEST_CASE("existing head with a different class count is rejected")
{
    auto data = testsupport::blobs(3, 10, 8, 2.0, 0.5, 10);
    HyperParams hp = small_hp(8);
    Rng rng(1);
    auto bank = init_params<float>(hp, rng);
    add_head(bank, "task", 2, rng);
    CHECK_THROWS_AS(evolve_on(bank, data, hp), DataError);
}
