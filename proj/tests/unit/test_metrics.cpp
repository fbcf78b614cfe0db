#include <doctest.h>

#include <fstream>
#include <numeric>
#include <sstream>

#include "pathnet/error.hpp"
#include "pathnet/evolution.hpp"
#include "pathnet/metrics.hpp"
#include "support.hpp"

using namespace pathnet;

namespace {

ConfusionMatrix from_rows(const std::vector<std::vector<std::int64_t>>& rows)
{
    ConfusionMatrix m(static_cast<int>(rows.size()));
    for (std::size_t t = 0; t < rows.size(); ++t) {
        for (std::size_t p = 0; p < rows.size(); ++p) {
            m.at(static_cast<int>(t), static_cast<int>(p)) = rows[t][p];
        }
    }
    return m;
}

// Recall / precision means straight from the definitions.
double mean_recall(const ConfusionMatrix& m)
{
    double sum = 0.0;
    int n = 0;
    for (int c = 0; c < m.classes(); ++c) {
        std::int64_t row = 0;
        for (int p = 0; p < m.classes(); ++p) {
            row += m.at(c, p);
        }
        if (row > 0) {
            sum += static_cast<double>(m.at(c, c)) / static_cast<double>(row);
            ++n;
        }
    }
    return sum / n;
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("confusion tallies")
{
    const std::vector<int> truth{0, 0, 1, 1};
    const std::vector<int> pred{0, 1, 1, 1};
    const auto m = confusion(truth, pred, 2);
    CHECK(m == from_rows({{1, 1}, {0, 2}}));
    CHECK(m.total() == 4);
    CHECK(m.trace() == 3);
    CHECK(m.support(0) == 2);
    CHECK(m.predictions(1) == 3);

    const auto perfect = confusion(truth, truth, 2);
    CHECK(perfect == from_rows({{2, 0}, {0, 2}}));

    const auto empty = confusion(std::vector<int>{}, std::vector<int>{}, 3);
    CHECK(empty.total() == 0);

    CHECK_THROWS_AS(confusion(truth, std::vector<int>{0, 1}, 2), Error);
    CHECK_THROWS_AS(confusion(std::vector<int>{2}, std::vector<int>{0}, 2), Error);
}

TEST_CASE("war, uar and uap on the hand tally")
{
    const auto m = from_rows({{1, 1}, {0, 2}});
    CHECK(war(m) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(uar(m) == doctest::Approx((0.5 + 1.0) / 2.0).epsilon(1e-12));
    CHECK(uap(m) == doctest::Approx((1.0 + 2.0 / 3.0) / 2.0).epsilon(1e-12));
    CHECK(std::abs(uap(m) - 0.8333) < 1e-4);

    const auto diag = from_rows({{3, 0, 0}, {0, 5, 0}, {0, 0, 1}});
    CHECK(war(diag) == 1.0);
    CHECK(uar(diag) == 1.0);
    CHECK(uap(diag) == 1.0);

    CHECK_THROWS_AS(war(ConfusionMatrix(2)), Error);
    CHECK_THROWS_AS(uar(ConfusionMatrix(2)), Error);
    CHECK_THROWS_AS(uap(ConfusionMatrix(2)), Error);
}

TEST_CASE("absent classes are left out of the means")
{
    // Class 2 has no support and is never predicted.
    const auto m = from_rows({{2, 1, 0}, {1, 2, 0}, {0, 0, 0}});
    CHECK(uar(m) == doctest::Approx(2.0 / 3.0));
    CHECK(uap(m) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("balanced classes give war equal to uar")
{
    Rng rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        const int c = rng.uniform_int(2, 5);
        std::vector<int> truth;
        std::vector<int> pred;
        for (int k = 0; k < c; ++k) {
            for (int n = 0; n < 10; ++n) {
                truth.push_back(k);
                pred.push_back(rng.uniform_int(0, c - 1));
            }
        }
        const auto m = confusion(truth, pred, c);
        CHECK(war(m) == doctest::Approx(uar(m)).epsilon(1e-12));
    }
}

TEST_CASE("metric invariances")
{
    Rng rng(2);
    for (int trial = 0; trial < 100; ++trial) {
        const int c = rng.uniform_int(2, 5);
        ConfusionMatrix m(c);
        for (int t = 0; t < c; ++t) {
            for (int p = 0; p < c; ++p) {
                m.at(t, p) = rng.uniform_int(0, 9);
            }
            m.at(t, t) += 1;
        }
        // Relabel classes by a random permutation.
        std::vector<int> perm(static_cast<std::size_t>(c));
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(std::span<int>(perm));
        ConfusionMatrix q(c);
        for (int t = 0; t < c; ++t) {
            for (int p = 0; p < c; ++p) {
                q.at(perm[static_cast<std::size_t>(t)], perm[static_cast<std::size_t>(p)]) = m.at(t, p);
            }
        }
        CHECK(war(q) == doctest::Approx(war(m)).epsilon(1e-12));
        CHECK(uar(q) == doctest::Approx(uar(m)).epsilon(1e-12));
        CHECK(uap(q) == doctest::Approx(uap(m)).epsilon(1e-12));
        CHECK(uar(m) == doctest::Approx(mean_recall(m)).epsilon(1e-12));

        // Duplicating every sample of one class keeps recall per class.
        const int k = rng.uniform_int(0, c - 1);
        const int times = rng.uniform_int(2, 4);
        ConfusionMatrix dup = m;
        for (int p = 0; p < c; ++p) {
            dup.at(k, p) *= times;
        }
        CHECK(uar(dup) == doctest::Approx(uar(m)).epsilon(1e-12));
        const double w = war(m);
        const double rk = static_cast<double>(m.at(k, k)) / static_cast<double>(m.support(k));
        if (std::abs(rk - w) > 1e-9) {
            CHECK(war(dup) != doctest::Approx(w));
        }
        CHECK(war(m) >= 0.0);
        CHECK(war(m) <= 1.0);
    }
}

TEST_CASE("roc auc on hand examples")
{
    const std::vector<double> s{0.9, 0.8, 0.3, 0.1};
    const std::vector<int> t{1, 0, 1, 0};
    const auto roc = roc_auc(s, t);
    CHECK(roc.auc == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(roc.auc == testsupport::mann_whitney(s, t));

    const auto perfect = roc_auc(std::vector<double>{0.9, 0.8, 0.2}, std::vector<int>{1, 1, 0});
    CHECK(perfect.auc == 1.0);
    const auto flat = roc_auc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, std::vector<int>{1, 0, 1, 0});
    CHECK(flat.auc == 0.5);
    REQUIRE(flat.points.size() == 2);

    CHECK_THROWS_WITH(roc_auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}),
                      doctest::Contains("AUC undefined"));
    CHECK_THROWS_WITH(roc_auc(std::vector<double>{0.1, 0.2}, std::vector<int>{0, 0}),
                      doctest::Contains("AUC undefined"));
}

TEST_CASE("roc auc equals the concordant pair statistic")
{
    Rng rng(3);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 2 + rng.uniform_index(49);
        std::vector<double> s(n);
        std::vector<int> t(n);
        for (std::size_t i = 0; i < n; ++i) {
            // Coarse scores so ties occur.
            s[i] = static_cast<double>(rng.uniform_int(0, 10)) / 10.0;
            t[i] = rng.bernoulli(0.5) ? 1 : 0;
        }
        t[0] = 1;
        t[1] = 0;
        const auto roc = roc_auc(s, t);
        CHECK(roc.auc == testsupport::mann_whitney(s, t));

        // Monotone staircase from (0,0) to (1,1).
        REQUIRE(roc.points.size() >= 2);
        CHECK(roc.points.front().fpr == 0.0);
        CHECK(roc.points.front().tpr == 0.0);
        CHECK(std::isinf(roc.points.front().threshold));
        CHECK(roc.points.back().fpr == 1.0);
        CHECK(roc.points.back().tpr == 1.0);
        for (std::size_t i = 1; i < roc.points.size(); ++i) {
            CHECK(roc.points[i].fpr >= roc.points[i - 1].fpr);
            CHECK(roc.points[i].tpr >= roc.points[i - 1].tpr);
            CHECK(roc.points[i].threshold < roc.points[i - 1].threshold);
        }

        std::vector<double> flipped(n);
        for (std::size_t i = 0; i < n; ++i) {
            flipped[i] = 1.0 - s[i];
        }
        CHECK(roc_auc(flipped, t).auc == doctest::Approx(1.0 - roc.auc).epsilon(1e-12));
    }
}

TEST_CASE("evaluate builds a full report")
{
    const std::vector<std::vector<double>> post{{0.7, 0.2, 0.1}, {0.1, 0.8, 0.1}, {0.3, 0.3, 0.4}, {0.6, 0.3, 0.1}};
    const std::vector<int> truth{0, 1, 2, 1};
    const auto r = evaluate(post, truth, {"a", "b", "c"});
    CHECK(r.confusion == from_rows({{1, 0, 0}, {1, 1, 0}, {0, 0, 1}}));
    CHECK(r.war == doctest::Approx(0.75));
    CHECK(r.uar == doctest::Approx((1.0 + 0.5 + 1.0) / 3.0));
    REQUIRE(r.per_class.size() == 3);
    CHECK(r.per_class[1].name == "b");
    CHECK(*r.per_class[1].recall == doctest::Approx(0.5));
    CHECK(*r.per_class[0].precision == doctest::Approx(0.5));
    REQUIRE(r.per_class[2].auc.has_value());
    CHECK(*r.per_class[2].auc == 1.0);

    const nlohmann::json j = r;
    const auto back = eval_report_from_json(j);
    CHECK(back.confusion == r.confusion);
    CHECK(back.war == r.war);
    CHECK(back.per_class.size() == 3);
    CHECK(back.per_class[0].roc.size() == r.per_class[0].roc.size());
    CHECK(std::isinf(back.per_class[0].roc.front().threshold));
    CHECK(j.at("per_class")[0].at("roc")[0].at("threshold").is_null());
}

TEST_CASE("classes missing from the truth have no auc or recall")
{
    const std::vector<std::vector<double>> post{{0.7, 0.3}, {0.6, 0.4}};
    const std::vector<int> truth{0, 0};
    const auto r = evaluate(post, truth, {"a", "b"});
    CHECK_FALSE(r.per_class[0].auc.has_value());
    CHECK_FALSE(r.per_class[1].recall.has_value());
    CHECK_FALSE(r.per_class[1].precision.has_value());
    CHECK(r.per_class[1].roc.empty());
}

TEST_CASE("csv writers")
{
    testsupport::TempDir dir("metrics");
    const auto m = from_rows({{1, 1}, {0, 2}});
    EvalReport r = evaluate({{0.9, 0.1}, {0.4, 0.6}, {0.2, 0.8}, {0.3, 0.7}}, std::vector<int>{0, 0, 1, 1}, {"x", "y"});
    CHECK(r.confusion == m);
    write_confusion_csv(dir / "cm.csv", r);
    CHECK(slurp(dir / "cm.csv") == "true\\predicted,x,y\nx,1,1\ny,0,2\n");
    write_roc_csv(dir / "roc.csv", r.per_class[1]);
    const std::string roc = slurp(dir / "roc.csv");
    CHECK(roc.rfind("threshold,fpr,tpr\n", 0) == 0);
    CHECK(roc.find("inf,0,0\n") != std::string::npos);
}

TEST_CASE("learning curves")
{
    History a;
    History b;
    for (int g = 1; g <= 200; ++g) {
        a.push_back({g, 0, 0.5 + g * 0.001, 0.1, std::nullopt});
        b.push_back({g, 1, 0.4 + g * 0.001, 0.1, 0.3});
    }
    const auto rows = assemble_curves(a, b);
    CHECK(rows.size() == 200);
    CHECK_FALSE(rows[0].transfer_test_acc.has_value());
    CHECK(*rows[0].scratch_test_acc == 0.3);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i].winner_fitness_transfer >= rows[i - 1].winner_fitness_transfer);
    }
    testsupport::TempDir dir("curves");
    write_curves_csv(dir / "c.csv", rows);
    const std::string text = slurp(dir / "c.csv");
    CHECK(text.rfind("generation,transfer_test_acc,scratch_test_acc,winner_fitness_transfer,winner_fitness_scratch\n", 0) ==
          0);
    CHECK(text.find("\n1,,0.29999999999999999,") != std::string::npos);

    b.pop_back();
    CHECK_THROWS_AS(assemble_curves(a, b), Error);
}

TEST_CASE("monotone fitness stub gives a non-decreasing winner column")
{
    HyperParams hp;
    hp.generations = 50;
    auto run = [&](std::uint64_t seed) {
        auto state = init_population(hp, Rng(seed));
        int calls = 0;
        auto oracle = [&](const Genotype&, Rng&) { return static_cast<double>(++calls) / (2.0 * hp.generations); };
        while (state.generation < hp.generations) {
            tournament_step(state, hp, oracle);
        }
        return state.history;
    };
    const auto rows = assemble_curves(run(1), run(2));
    REQUIRE(rows.size() == 50);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i].winner_fitness_transfer >= rows[i - 1].winner_fitness_transfer);
        CHECK(rows[i].winner_fitness_scratch >= rows[i - 1].winner_fitness_scratch);
        CHECK(rows[i].generation == static_cast<int>(i) + 1);
    }
}
