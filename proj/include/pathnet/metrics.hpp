#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pathnet/history.hpp"

namespace pathnet {

/// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
public:
    ConfusionMatrix() = default;
    explicit ConfusionMatrix(int classes);

    int classes() const { return classes_; }
    std::int64_t& at(int truth, int predicted);
    std::int64_t at(int truth, int predicted) const;
    std::int64_t total() const;
    std::int64_t trace() const;
    std::int64_t support(int c) const;      // row sum
    std::int64_t predictions(int c) const;  // column sum

    bool operator==(const ConfusionMatrix&) const = default;

private:
    int classes_ = 0;
    std::vector<std::int64_t> counts_;
};

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted, int classes);

/// trace / total.
double war(const ConfusionMatrix& m);
/// Mean per-class recall over classes with non-zero support.
double uar(const ConfusionMatrix& m);
/// Mean per-class precision over classes with at least one prediction.
double uap(const ConfusionMatrix& m);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    /// Score threshold reached at this point (+inf for the origin).
    double threshold = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;
    double auc = 0.0;
};

/// One-vs-rest ROC by a descending sweep over distinct scores; tied scores
/// move together (diagonal segment). AUC is the trapezoidal area, computed
/// from integer counts so it equals the Mann-Whitney statistic exactly.
/// Throws "AUC undefined" unless both outcomes are present.
RocCurve roc_auc(std::span<const double> scores, std::span<const int> truths);

struct ClassReport {
    std::string name;
    std::optional<double> recall;
    std::optional<double> precision;
    std::optional<double> auc;
    std::vector<RocPoint> roc;
};

struct EvalReport {
    ConfusionMatrix confusion;
    double war = 0.0;
    double uar = 0.0;
    double uap = 0.0;
    std::vector<ClassReport> per_class;
};

/// Report from per-sample posteriors (argmax, ties to the lower class).
EvalReport evaluate(const std::vector<std::vector<double>>& posteriors, std::span<const int> truth,
                    const std::vector<std::string>& class_names);

void to_json(nlohmann::json& j, const EvalReport& r);
EvalReport eval_report_from_json(const nlohmann::json& j);

void write_confusion_csv(const std::filesystem::path& path, const EvalReport& r);
/// Columns: threshold,fpr,tpr.
void write_roc_csv(const std::filesystem::path& path, const ClassReport& c);

/// Paired learning curve row; absent values print as empty CSV fields.
struct CurveRow {
    int generation = 0;
    std::optional<double> transfer_test_acc;
    std::optional<double> scratch_test_acc;
    double winner_fitness_transfer = 0.0;
    double winner_fitness_scratch = 0.0;
};

/// Joins two histories generation by generation; throws on misalignment.
std::vector<CurveRow> assemble_curves(const History& transfer, const History& scratch);
void write_curves_csv(const std::filesystem::path& path, const std::vector<CurveRow>& rows);

}  // namespace pathnet
