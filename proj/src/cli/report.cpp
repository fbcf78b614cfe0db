#include "pathnet/cli/report.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <memory>

#include "pathnet/error.hpp"
#include "pathnet/history.hpp"
#include "pathnet/metrics.hpp"

namespace pathnet::cli {

namespace {

namespace fs = std::filesystem;

nlohmann::json read_json(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot read " + path.string());
    }
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

const char* const kLevels[] = {"segment", "utterance"};

nlohmann::json level_json(const EvalReport& r)
{
    nlohmann::json classes = nlohmann::json::array();
    for (const auto& c : r.per_class) {
        auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
        classes.push_back({{"name", c.name}, {"recall", opt(c.recall)}, {"precision", opt(c.precision)}, {"auc", opt(c.auc)}});
    }
    return {{"samples", r.confusion.total()}, {"war", r.war}, {"uar", r.uar}, {"uap", r.uap}, {"per_class", classes}};
}

void require(bool ok, const std::string& what)
{
    if (!ok) {
        throw DataError("report schema: " + what);
    }
}

bool is_unit(const nlohmann::json& v)
{
    return v.is_number() && v.get<double>() >= 0.0 && v.get<double>() <= 1.0;
}

bool is_unit_or_null(const nlohmann::json& v)
{
    return v.is_null() || is_unit(v);
}

}  // namespace

std::string safe_name(const std::string& name)
{
    std::string out;
    for (char c : name) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                        c == '_' || c == '.';
        out += ok ? c : '_';
    }
    if (out.empty() || out == "." || out == "..") {
        out = "_" + out;
    }
    return out;
}

nlohmann::json build_report(const fs::path& run_dir, const fs::path& out_dir)
{
    const nlohmann::json resolved = read_json(run_dir / "resolved_config.json");
    const nlohmann::json summary = read_json(run_dir / "summary.json");
    const std::string command = resolved.value("command", std::string{});
    std::vector<std::pair<std::string, std::string>> runs;
    if (command == "train") {
        runs = {{"model", "eval.json"}};
    } else if (command == "transfer") {
        runs = {{"transfer", "transfer_eval.json"}, {"scratch", "scratch_eval.json"}};
    } else {
        throw DataError(run_dir.string() + " is not a train or transfer run");
    }
    fs::create_directories(out_dir);

    nlohmann::json report{{"schema_version", kReportSchemaVersion},
                          {"command", command},
                          {"seed", resolved.at("seed")},
                          {"scheme", summary.at("scheme")},
                          {"folds", nlohmann::json::array()}};
    std::map<std::string, std::map<std::string, std::vector<const EvalReport*>>> pooled;
    std::vector<std::unique_ptr<EvalReport>> keep;

    for (const auto& fold : summary.at("folds")) {
        const std::string name = fold.at("name").get<std::string>();
        const fs::path dir = run_dir / fold.at("dir").get<std::string>();
        const fs::path fold_out = out_dir / safe_name(name);
        fs::create_directories(fold_out);
        nlohmann::json evaluations = nlohmann::json::object();
        nlohmann::json confusion_files = nlohmann::json::object();
        nlohmann::json roc_files = nlohmann::json::object();
        for (const auto& [run, file] : runs) {
            const nlohmann::json ej = read_json(dir / file);
            nlohmann::json levels = nlohmann::json::object();
            for (const char* level : kLevels) {
                keep.push_back(std::make_unique<EvalReport>(eval_report_from_json(ej.at(level))));
                const EvalReport& r = *keep.back();
                pooled[run][level].push_back(&r);
                levels[level] = level_json(r);
                const std::string stem = run + "_" + level;
                const fs::path cm = fold_out / (stem + "_confusion.csv");
                write_confusion_csv(cm, r);
                confusion_files[stem] = fs::relative(cm, out_dir).generic_string();
                nlohmann::json per_class = nlohmann::json::object();
                for (const auto& c : r.per_class) {
                    if (c.roc.empty()) {
                        continue;
                    }
                    const fs::path roc = fold_out / (stem + "_roc_" + safe_name(c.name) + ".csv");
                    write_roc_csv(roc, c);
                    per_class[c.name] = fs::relative(roc, out_dir).generic_string();
                }
                roc_files[stem] = per_class;
            }
            evaluations[run] = levels;
        }
        nlohmann::json curves = nullptr;
        if (command == "transfer") {
            const auto rows = assemble_curves(read_history_csv(dir / "transfer_history.csv"),
                                              read_history_csv(dir / "scratch_history.csv"));
            const fs::path path = fold_out / "curves.csv";
            write_curves_csv(path, rows);
            curves = fs::relative(path, out_dir).generic_string();
        } else {
            const History h = read_history_csv(dir / "history.csv");
            const fs::path path = fold_out / "history.csv";
            write_history_csv(path, h);
            curves = fs::relative(path, out_dir).generic_string();
        }
        report["folds"].push_back({{"name", name},
                                   {"evaluations", evaluations},
                                   {"files", {{"confusion", confusion_files}, {"roc", roc_files}, {"curves", curves}}}});
    }

    nlohmann::json aggregate = nlohmann::json::object();
    for (const auto& [run, levels] : pooled) {
        for (const auto& [level, reports] : levels) {
            nlohmann::json stats = nlohmann::json::object();
            for (const char* metric : {"war", "uar", "uap"}) {
                double sum = 0.0;
                double lo = 1.0;
                double hi = 0.0;
                for (const EvalReport* r : reports) {
                    const double v = std::string(metric) == "war" ? r->war : std::string(metric) == "uar" ? r->uar : r->uap;
                    sum += v;
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
                stats[metric] = {{"mean", sum / static_cast<double>(reports.size())}, {"min", lo}, {"max", hi}};
            }
            aggregate[run][level] = stats;
        }
    }
    report["aggregate"] = aggregate;

    std::ofstream out(out_dir / "report.json");
    out << report.dump(2) << '\n';
    if (!out) {
        throw Error("cannot write " + (out_dir / "report.json").string());
    }
    return report;
}

void validate_report(const nlohmann::json& r)
{
    require(r.is_object(), "top level must be an object");
    for (const char* key : {"schema_version", "command", "seed", "scheme", "folds", "aggregate"}) {
        require(r.contains(key), std::string("missing '") + key + "'");
    }
    require(r.at("schema_version") == kReportSchemaVersion, "unsupported schema_version");
    const std::string command = r.at("command").is_string() ? r.at("command").get<std::string>() : "";
    require(command == "train" || command == "transfer", "command must be 'train' or 'transfer'");
    require(r.at("seed").is_number_unsigned(), "seed must be an unsigned integer");
    require(r.at("scheme") == "kfold" || r.at("scheme") == "losocv", "scheme must be 'kfold' or 'losocv'");
    const std::vector<std::string> runs =
        command == "train" ? std::vector<std::string>{"model"} : std::vector<std::string>{"transfer", "scratch"};
    require(r.at("folds").is_array() && !r.at("folds").empty(), "folds must be a non-empty array");
    for (const auto& fold : r.at("folds")) {
        require(fold.contains("name") && fold.at("name").is_string(), "fold.name must be a string");
        const std::string where = "fold '" + fold.at("name").get<std::string>() + "': ";
        require(fold.contains("evaluations") && fold.at("evaluations").is_object(), where + "missing evaluations");
        require(fold.contains("files") && fold.at("files").is_object(), where + "missing files");
        const auto& files = fold.at("files");
        require(files.contains("confusion") && files.at("confusion").is_object(), where + "files.confusion");
        require(files.contains("roc") && files.at("roc").is_object(), where + "files.roc");
        require(files.contains("curves") && files.at("curves").is_string(), where + "files.curves");
        for (const auto& run : runs) {
            require(fold.at("evaluations").contains(run), where + "missing evaluation '" + run + "'");
            for (const char* level : kLevels) {
                const auto& ev = fold.at("evaluations").at(run);
                require(ev.contains(level), where + run + " missing level " + level);
                const auto& lv = ev.at(level);
                require(lv.contains("samples") && lv.at("samples").is_number_integer(), where + "samples");
                for (const char* m : {"war", "uar", "uap"}) {
                    require(lv.contains(m) && is_unit(lv.at(m)), where + run + "." + level + "." + m + " must lie in [0,1]");
                }
                require(lv.contains("per_class") && lv.at("per_class").is_array(), where + "per_class");
                for (const auto& c : lv.at("per_class")) {
                    require(c.contains("name") && c.at("name").is_string(), where + "per_class.name");
                    for (const char* m : {"recall", "precision", "auc"}) {
                        require(c.contains(m) && is_unit_or_null(c.at(m)), where + "per_class." + m);
                    }
                }
                const std::string stem = run + "_" + level;
                require(files.at("confusion").contains(stem) && files.at("confusion").at(stem).is_string(),
                        where + "files.confusion." + stem);
                require(files.at("roc").contains(stem) && files.at("roc").at(stem).is_object(), where + "files.roc." + stem);
            }
        }
    }
    const auto& agg = r.at("aggregate");
    require(agg.is_object(), "aggregate must be an object");
    for (const auto& run : runs) {
        require(agg.contains(run), "aggregate missing '" + run + "'");
        for (const char* level : kLevels) {
            require(agg.at(run).contains(level), "aggregate." + run + " missing " + level);
            for (const char* m : {"war", "uar", "uap"}) {
                const auto& s = agg.at(run).at(level);
                require(s.contains(m), "aggregate metric missing");
                for (const char* k : {"mean", "min", "max"}) {
                    require(s.at(m).contains(k) && is_unit(s.at(m).at(k)), "aggregate." + run + "." + level + "." + m + "." + k);
                }
            }
        }
    }
}

}  // namespace pathnet::cli
