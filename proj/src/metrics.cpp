#include "pathnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "pathnet/error.hpp"
#include "pathnet/network.hpp"

namespace pathnet {

ConfusionMatrix::ConfusionMatrix(int classes)
    : classes_(classes), counts_(static_cast<std::size_t>(classes) * static_cast<std::size_t>(classes), 0)
{
    if (classes < 1) {
        throw Error("confusion matrix needs at least one class");
    }
}

std::int64_t& ConfusionMatrix::at(int truth, int predicted)
{
    if (truth < 0 || truth >= classes_ || predicted < 0 || predicted >= classes_) {
        throw Error("confusion matrix index out of range");
    }
    return counts_[static_cast<std::size_t>(truth) * classes_ + predicted];
}

std::int64_t ConfusionMatrix::at(int truth, int predicted) const
{
    return const_cast<ConfusionMatrix*>(this)->at(truth, predicted);
}

std::int64_t ConfusionMatrix::total() const
{
    return std::accumulate(counts_.begin(), counts_.end(), std::int64_t{0});
}

std::int64_t ConfusionMatrix::trace() const
{
    std::int64_t t = 0;
    for (int c = 0; c < classes_; ++c) {
        t += at(c, c);
    }
    return t;
}

std::int64_t ConfusionMatrix::support(int c) const
{
    std::int64_t s = 0;
    for (int p = 0; p < classes_; ++p) {
        s += at(c, p);
    }
    return s;
}

std::int64_t ConfusionMatrix::predictions(int c) const
{
    std::int64_t s = 0;
    for (int t = 0; t < classes_; ++t) {
        s += at(t, c);
    }
    return s;
}

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted, int classes)
{
    if (truth.size() != predicted.size()) {
        throw Error("confusion: " + std::to_string(truth.size()) + " labels vs " +
                    std::to_string(predicted.size()) + " predictions");
    }
    ConfusionMatrix m(classes);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        ++m.at(truth[i], predicted[i]);
    }
    return m;
}

double war(const ConfusionMatrix& m)
{
    if (m.total() == 0) {
        throw Error("WAR of an empty confusion matrix is undefined");
    }
    return static_cast<double>(m.trace()) / static_cast<double>(m.total());
}

double uar(const ConfusionMatrix& m)
{
    if (m.total() == 0) {
        throw Error("UAR of an empty confusion matrix is undefined");
    }
    double sum = 0.0;
    int n = 0;
    for (int c = 0; c < m.classes(); ++c) {
        if (const auto s = m.support(c); s > 0) {
            sum += static_cast<double>(m.at(c, c)) / static_cast<double>(s);
            ++n;
        }
    }
    return sum / n;
}

double uap(const ConfusionMatrix& m)
{
    if (m.total() == 0) {
        throw Error("UAP of an empty confusion matrix is undefined");
    }
    double sum = 0.0;
    int n = 0;
    for (int c = 0; c < m.classes(); ++c) {
        if (const auto p = m.predictions(c); p > 0) {
            sum += static_cast<double>(m.at(c, c)) / static_cast<double>(p);
            ++n;
        }
    }
    return sum / n;
}

RocCurve roc_auc(std::span<const double> scores, std::span<const int> truths)
{
    if (scores.size() != truths.size()) {
        throw Error("roc_auc: scores and truths differ in length");
    }
    std::int64_t positives = 0;
    for (int t : truths) {
        positives += t != 0 ? 1 : 0;
    }
    const auto negatives = static_cast<std::int64_t>(truths.size()) - positives;
    if (positives == 0 || negatives == 0) {
        throw Error("AUC undefined: truths contain a single class");
    }
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocCurve curve;
    curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    // Twice the area in units of (1/P)*(1/N).
    std::int64_t doubled_area = 0;
    for (std::size_t i = 0; i < order.size();) {
        const double threshold = scores[order[i]];
        const std::int64_t tp0 = tp;
        const std::int64_t fp0 = fp;
        for (; i < order.size() && scores[order[i]] == threshold; ++i) {
            (truths[order[i]] != 0 ? tp : fp) += 1;
        }
        doubled_area += (fp - fp0) * (tp + tp0);
        curve.points.push_back({static_cast<double>(fp) / static_cast<double>(negatives),
                                static_cast<double>(tp) / static_cast<double>(positives), threshold});
    }
    curve.auc = static_cast<double>(doubled_area) / (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));
    return curve;
}

EvalReport evaluate(const std::vector<std::vector<double>>& posteriors, std::span<const int> truth,
                    const std::vector<std::string>& class_names)
{
    const int classes = static_cast<int>(class_names.size());
    if (posteriors.size() != truth.size()) {
        throw Error("evaluate: posterior count does not match label count");
    }
    std::vector<int> predicted;
    predicted.reserve(posteriors.size());
    for (const auto& p : posteriors) {
        if (p.size() != class_names.size()) {
            throw Error("evaluate: posterior width does not match class count");
        }
        predicted.push_back(static_cast<int>(argmax(p)));
    }
    EvalReport report;
    report.confusion = confusion(truth, predicted, classes);
    report.war = war(report.confusion);
    report.uar = uar(report.confusion);
    report.uap = uap(report.confusion);
    for (int c = 0; c < classes; ++c) {
        ClassReport cr;
        cr.name = class_names[static_cast<std::size_t>(c)];
        if (const auto s = report.confusion.support(c); s > 0) {
            cr.recall = static_cast<double>(report.confusion.at(c, c)) / static_cast<double>(s);
        }
        if (const auto p = report.confusion.predictions(c); p > 0) {
            cr.precision = static_cast<double>(report.confusion.at(c, c)) / static_cast<double>(p);
        }
        std::vector<double> scores;
        std::vector<int> is_class;
        for (std::size_t i = 0; i < posteriors.size(); ++i) {
            scores.push_back(posteriors[i][static_cast<std::size_t>(c)]);
            is_class.push_back(truth[i] == c ? 1 : 0);
        }
        const auto positives = std::count(is_class.begin(), is_class.end(), 1);
        if (positives > 0 && positives < static_cast<std::ptrdiff_t>(is_class.size())) {
            RocCurve roc = roc_auc(scores, is_class);
            cr.auc = roc.auc;
            cr.roc = std::move(roc.points);
        }
        report.per_class.push_back(std::move(cr));
    }
    return report;
}

namespace {

nlohmann::json optional_json(const std::optional<double>& v)
{
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<double> optional_from(const nlohmann::json& j)
{
    return j.is_null() ? std::nullopt : std::optional<double>(j.get<double>());
}

std::string real(double v)
{
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void to_json(nlohmann::json& j, const EvalReport& r)
{
    nlohmann::json matrix = nlohmann::json::array();
    for (int t = 0; t < r.confusion.classes(); ++t) {
        std::vector<std::int64_t> row;
        for (int p = 0; p < r.confusion.classes(); ++p) {
            row.push_back(r.confusion.at(t, p));
        }
        matrix.push_back(row);
    }
    nlohmann::json classes = nlohmann::json::array();
    for (const auto& c : r.per_class) {
        nlohmann::json roc = nlohmann::json::array();
        for (const auto& p : c.roc) {
            // JSON has no infinity; the origin threshold is written as null.
            roc.push_back({{"threshold", std::isinf(p.threshold) ? nlohmann::json(nullptr) : nlohmann::json(p.threshold)},
                           {"fpr", p.fpr},
                           {"tpr", p.tpr}});
        }
        classes.push_back({{"name", c.name},
                           {"recall", optional_json(c.recall)},
                           {"precision", optional_json(c.precision)},
                           {"auc", optional_json(c.auc)},
                           {"roc", roc}});
    }
    j = {{"samples", r.confusion.total()},
         {"war", r.war},
         {"uar", r.uar},
         {"uap", r.uap},
         {"confusion", matrix},
         {"per_class", classes}};
}

EvalReport eval_report_from_json(const nlohmann::json& j)
{
    try {
        EvalReport r;
        const auto matrix = j.at("confusion").get<std::vector<std::vector<std::int64_t>>>();
        r.confusion = ConfusionMatrix(static_cast<int>(matrix.size()));
        for (std::size_t t = 0; t < matrix.size(); ++t) {
            if (matrix[t].size() != matrix.size()) {
                throw DataError("confusion matrix is not square");
            }
            for (std::size_t p = 0; p < matrix.size(); ++p) {
                r.confusion.at(static_cast<int>(t), static_cast<int>(p)) = matrix[t][p];
            }
        }
        r.war = j.at("war").get<double>();
        r.uar = j.at("uar").get<double>();
        r.uap = j.at("uap").get<double>();
        for (const auto& c : j.at("per_class")) {
            ClassReport cr;
            cr.name = c.at("name").get<std::string>();
            cr.recall = optional_from(c.at("recall"));
            cr.precision = optional_from(c.at("precision"));
            cr.auc = optional_from(c.at("auc"));
            for (const auto& p : c.at("roc")) {
                const auto& th = p.at("threshold");
                cr.roc.push_back({p.at("fpr").get<double>(), p.at("tpr").get<double>(),
                                  th.is_null() ? std::numeric_limits<double>::infinity() : th.get<double>()});
            }
            r.per_class.push_back(std::move(cr));
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed evaluation report: ") + e.what());
    }
}

void write_confusion_csv(const std::filesystem::path& path, const EvalReport& r)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << "true\\predicted";
    for (const auto& c : r.per_class) {
        out << ',' << c.name;
    }
    out << '\n';
    for (int t = 0; t < r.confusion.classes(); ++t) {
        out << r.per_class[static_cast<std::size_t>(t)].name;
        for (int p = 0; p < r.confusion.classes(); ++p) {
            out << ',' << r.confusion.at(t, p);
        }
        out << '\n';
    }
}

void write_roc_csv(const std::filesystem::path& path, const ClassReport& c)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << "threshold,fpr,tpr\n";
    for (const auto& p : c.roc) {
        out << real(p.threshold) << ',' << real(p.fpr) << ',' << real(p.tpr) << '\n';
    }
}

std::vector<CurveRow> assemble_curves(const History& transfer, const History& scratch)
{
    if (transfer.size() != scratch.size()) {
        throw Error("assemble_curves: histories have " + std::to_string(transfer.size()) + " and " +
                    std::to_string(scratch.size()) + " generations");
    }
    std::vector<CurveRow> rows;
    rows.reserve(transfer.size());
    for (std::size_t i = 0; i < transfer.size(); ++i) {
        if (transfer[i].generation != scratch[i].generation) {
            throw Error("assemble_curves: generation " + std::to_string(transfer[i].generation) +
                        " is not aligned with " + std::to_string(scratch[i].generation));
        }
        rows.push_back({transfer[i].generation, transfer[i].test_accuracy, scratch[i].test_accuracy,
                        transfer[i].winner_fitness, scratch[i].winner_fitness});
    }
    return rows;
}

void write_curves_csv(const std::filesystem::path& path, const std::vector<CurveRow>& rows)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << "generation,transfer_test_acc,scratch_test_acc,winner_fitness_transfer,winner_fitness_scratch\n";
    for (const auto& r : rows) {
        out << r.generation << ',' << (r.transfer_test_acc ? real(*r.transfer_test_acc) : "") << ','
            << (r.scratch_test_acc ? real(*r.scratch_test_acc) : "") << ',' << real(r.winner_fitness_transfer) << ','
            << real(r.winner_fitness_scratch) << '\n';
    }
}

}  // namespace pathnet
