#include "pathnet/cli/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "pathnet/checkpoint.hpp"
#include "pathnet/cli/report.hpp"
#include "pathnet/container.hpp"
#include "pathnet/error.hpp"
#include "pathnet/evaluation.hpp"
#include "pathnet/feature_cache.hpp"
#include "pathnet/splits.hpp"
#include "pathnet/synthetic.hpp"
#include "pathnet/transfer.hpp"

namespace pathnet::cli {

namespace {

namespace fs = std::filesystem;

void write_json(const fs::path& path, const nlohmann::json& j)
{
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << j.dump(2) << '\n';
}

void prepare_run_dir(const ExperimentConfig& config, const std::string& command)
{
    fs::create_directories(config.output_dir);
    nlohmann::json resolved = config.resolved();
    resolved["command"] = command;
    write_json(config.output_dir / "resolved_config.json", resolved);
}

std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Lazily generated synthetic pair shared by every synthetic dataset reference.
class DataSource {
public:
    explicit DataSource(const ExperimentConfig& config) : config_(config) {}

    struct Loaded {
        DatasetManifest manifest;
        Dataset data;
    };

    Loaded load(const DatasetRef& ref)
    {
        if (ref.manifest) {
            Loaded out;
            out.manifest = read_manifest(*ref.manifest, ref.name, ref.classes, ref.modality);
            out.manifest.validate();
            out.data = load_dataset(out.manifest);
            return out;
        }
        if (!pair_) {
            pair_ = gen_synthetic(config_.synthetic.value_or(SyntheticSpec{}), config_.seeds.synthetic);
        }
        const SyntheticTask& task = ref.synthetic == "source" ? pair_->source : pair_->destination;
        Loaded out{task.manifest, task.data};
        if (!ref.name.empty()) {
            out.manifest.name = ref.name;
            out.data.name = ref.name;
        }
        if (!ref.classes.empty()) {
            out.data = restrict_to_classes(out.data, ref.classes);
        }
        return out;
    }

private:
    const ExperimentConfig& config_;
    std::optional<SyntheticPair> pair_;
};

SplitPlan make_split(const ExperimentConfig& config, const DatasetManifest& manifest)
{
    if (config.split.scheme == "losocv") {
        return losocv_split(manifest);
    }
    return kfold_split(manifest, config.split.k, config.seeds.split);
}

std::vector<std::size_t> selected_folds(const ExperimentConfig& config, const SplitPlan& plan)
{
    std::vector<std::size_t> out;
    if (config.split.only.empty()) {
        for (std::size_t f = 0; f < plan.folds.size(); ++f) {
            out.push_back(f);
        }
        return out;
    }
    for (int f : config.split.only) {
        if (f < 0 || static_cast<std::size_t>(f) >= plan.folds.size()) {
            throw ConfigError("fold index " + std::to_string(f) + " out of range (split has " +
                              std::to_string(plan.folds.size()) + " folds)");
        }
        out.push_back(static_cast<std::size_t>(f));
    }
    return out;
}

nlohmann::json norm_json(const NormStats& s)
{
    return {{"mean", s.mean}, {"stddev", s.stddev}};
}

std::optional<NormStats> maybe_normalize(const ExperimentConfig& config, Dataset& train, Dataset* test)
{
    if (!config.normalize) {
        return std::nullopt;
    }
    NormStats stats = compute_norm_stats(train);
    apply_norm_stats(train, stats);
    if (test && !test->empty()) {
        apply_norm_stats(*test, stats);
    }
    return stats;
}

HyperParams fit_input_dim(const ExperimentConfig& config, HyperParams hp, const Dataset& data)
{
    if (!config.input_dim_explicit) {
        hp.input_dim = static_cast<int>(data.dim);
    } else if (static_cast<std::size_t>(hp.input_dim) != data.dim) {
        throw ConfigError("hyperparams.input_dim = " + std::to_string(hp.input_dim) + " but dataset '" + data.name +
                          "' has samples of size " + std::to_string(data.dim));
    }
    hp.validate();
    return hp;
}

nlohmann::json level_summary(const Evaluation& e)
{
    auto one = [](const EvalReport& r) { return nlohmann::json{{"war", r.war}, {"uar", r.uar}, {"uap", r.uap}}; };
    return {{"segment", one(e.segments)}, {"utterance", one(e.utterances)}};
}

std::string cache_name(const ManifestRow& row)
{
    return safe_name(row.subject) + "_" + safe_name(row.utterance) + ".pnfc";
}

}  // namespace

int cmd_extract(const ExperimentConfig& config)
{
    if (!config.extract) {
        throw ConfigError("extract needs an 'extract' block with a manifest");
    }
    prepare_run_dir(config, "extract");
    const ExtractConfig& ex = *config.extract;
    const DatasetManifest manifest = read_manifest(ex.manifest, {}, {}, "audio-segments");
    manifest.validate();
    fs::create_directories(ex.cache_dir);
    const nlohmann::json mel_json = config.mel;

    DatasetManifest index;
    index.name = manifest.name;
    index.class_list = manifest.class_list;
    index.modality = Modality::AudioSegments;
    index.base_dir = ex.cache_dir;
    int written = 0;
    int skipped = 0;
    nlohmann::json failures = nlohmann::json::array();
    for (const auto& row : manifest.rows) {
        const fs::path source = manifest.resolve(row);
        const std::string name = cache_name(row);
        const fs::path target = ex.cache_dir / name;
        try {
            const std::vector<std::byte> bytes = read_file_bytes(source);
            const std::string hash = hex64(fnv1a64(bytes));
            bool fresh = false;
            if (fs::exists(target)) {
                try {
                    const FeatureCache existing = read_feature_cache_header(target);
                    fresh = existing.meta.value("source_hash", std::string{}) == hash &&
                            existing.meta.value("mel", nlohmann::json{}) == mel_json;
                } catch (const std::exception&) {
                    fresh = false;
                }
            }
            if (fresh) {
                ++skipped;
            } else {
                const audio::Waveform wav = audio::parse_wav(bytes, config.mel.sample_rate);
                const auto segments = audio::extract_segments(wav, config.mel, row.utterance);
                FeatureCache cache;
                cache.utterance_id = row.utterance;
                cache.shape = {static_cast<int>(segments.size()), static_cast<int>(audio::kChannels),
                               config.mel.n_mels, config.mel.segment_frames};
                cache.channel_order = {"static", "delta", "delta2"};
                for (const auto& s : segments) {
                    cache.values.insert(cache.values.end(), s.values.begin(), s.values.end());
                }
                cache.meta = {{"source_hash", hash},
                              {"source", row.path},
                              {"subject", row.subject},
                              {"label", row.label},
                              {"mel", mel_json}};
                write_feature_cache(target, cache);
                ++written;
            }
            index.rows.push_back({name, row.label, row.subject, row.utterance});
        } catch (const std::exception& e) {
            failures.push_back({{"path", row.path}, {"error", e.what()}});
            std::cerr << "extract: " << row.path << ": " << e.what() << '\n';
        }
    }
    write_manifest(ex.cache_dir / "index.csv", index);
    write_json(config.output_dir / "extract_summary.json",
               {{"written", written}, {"skipped", skipped}, {"failed", failures}, {"total", manifest.rows.size()}});
    std::cout << "extract: " << written << " written, " << skipped << " unchanged, " << failures.size()
              << " failed\n";
    return failures.empty() ? kExitOk : kExitData;
}

int cmd_train(const ExperimentConfig& config)
{
    if (!config.dataset) {
        throw ConfigError("train needs a 'dataset' block");
    }
    prepare_run_dir(config, "train");
    DataSource source(config);
    const auto loaded = source.load(*config.dataset);
    const SplitPlan plan = make_split(config, loaded.manifest);
    nlohmann::json summary{{"command", "train"}, {"scheme", plan.scheme}, {"folds", nlohmann::json::array()}};
    for (std::size_t f : selected_folds(config, plan)) {
        const Fold& fold = plan.folds[f];
        Dataset train = loaded.data.select_rows(fold.train_rows);
        Dataset test = loaded.data.select_rows(fold.test_rows);
        if (train.empty() || test.empty()) {
            throw DataError("fold '" + fold.name + "' has an empty train or test side");
        }
        const auto stats = maybe_normalize(config, train, &test);
        HyperParams hp = fit_input_dim(config, config.hp_source, train);
        hp.rng_seed = splitmix64(config.seeds.train + f);

        EvolveOptions options;
        options.probe = &test;
        EvolutionResult r = evolve(train, hp, options);
        const Evaluation eval = evaluate_on(r.bank, r.best.genotype, std::nullopt, test, options.task_id);

        const fs::path dir = config.output_dir / "folds" / safe_name(fold.name);
        fs::create_directories(dir);
        write_history_csv(dir / "history.csv", r.history);
        save_checkpoint(dir / "checkpoint.pnck", Checkpoint{r.bank, {{"best", r.best.genotype}}});
        write_json(dir / "eval.json", eval);
        if (stats) {
            write_json(dir / "norm_stats.json", norm_json(*stats));
        }
        summary["folds"].push_back({{"name", fold.name},
                                    {"dir", fs::relative(dir, config.output_dir).generic_string()},
                                    {"train_samples", train.size()},
                                    {"test_samples", test.size()},
                                    {"best_genotype", r.best.genotype},
                                    {"eval", level_summary(eval)}});
        std::cout << "train: fold " << fold.name << " segment WAR " << eval.segments.war << " utterance WAR "
                  << eval.utterances.war << '\n';
    }
    write_json(config.output_dir / "summary.json", summary);
    return kExitOk;
}

int cmd_transfer(const ExperimentConfig& config)
{
    if (!config.transfer) {
        throw ConfigError("transfer needs a 'transfer' block");
    }
    prepare_run_dir(config, "transfer");
    const TransferConfig& tc = *config.transfer;
    DataSource data(config);

    TransferPlan plan;
    std::vector<std::vector<std::string>> lists;
    for (const auto& ref : tc.sources) {
        plan.sources.push_back(data.load(ref).data);
        lists.push_back(plan.sources.back().classes);
    }
    plan.shared_label_space = tc.shared_label_space.empty() ? shared_classes(lists) : tc.shared_label_space;
    if (plan.shared_label_space.empty()) {
        throw DataError("source datasets share no class labels");
    }
    if (tc.drop_unshared) {
        for (auto& s : plan.sources) {
            s = restrict_to_classes(s, plan.shared_label_space);
        }
    }
    // Normalization of the joined source set uses its own statistics.
    Dataset joined = join_sources(plan.sources, plan.shared_label_space);
    std::optional<NormStats> source_stats;
    if (config.normalize) {
        source_stats = compute_norm_stats(joined);
        for (auto& s : plan.sources) {
            apply_norm_stats(s, *source_stats);
        }
    }
    plan.hp_source = fit_input_dim(config, config.hp_source, joined);
    plan.hp_dest = fit_input_dim(config, config.hp_dest, joined);
    plan.seeds = {config.seeds.source, config.seeds.destination, config.seeds.baseline};

    SourceOutcome source = run_source_phase(plan);
    const fs::path source_dir = config.output_dir / "source";
    fs::create_directories(source_dir);
    write_history_csv(source_dir / "history.csv", source.history);
    save_checkpoint(source_dir / "checkpoint.pnck", Checkpoint{source.bank, {{"best", source.best.genotype}}});
    if (source_stats) {
        write_json(source_dir / "norm_stats.json", norm_json(*source_stats));
    }
    std::cout << "transfer: source best " << to_string(source.best.genotype) << " fitness " << source.best.fitness
              << '\n';

    const auto dest = data.load(tc.destination);
    const SplitPlan split = make_split(config, dest.manifest);
    nlohmann::json summary{{"command", "transfer"}, {"scheme", split.scheme}, {"folds", nlohmann::json::array()}};
    bool intact = true;
    for (std::size_t f : selected_folds(config, split)) {
        const Fold& fold = split.folds[f];
        plan.destination_train = dest.data.select_rows(fold.train_rows);
        plan.destination_test = dest.data.select_rows(fold.test_rows);
        if (plan.destination_train.empty() || plan.destination_test.empty()) {
            throw DataError("fold '" + fold.name + "' has an empty train or test side");
        }
        if (plan.destination_train.dim != joined.dim) {
            throw DataError("destination samples have size " + std::to_string(plan.destination_train.dim) +
                            ", sources have " + std::to_string(joined.dim));
        }
        const auto stats = maybe_normalize(config, plan.destination_train, &plan.destination_test);
        DestinationOutcome out = run_destination_phase(source, plan);
        intact = intact && out.frozen_intact();

        const fs::path dir = config.output_dir / "folds" / safe_name(fold.name);
        fs::create_directories(dir);
        write_history_csv(dir / "transfer_history.csv", out.transfer.result.history);
        write_history_csv(dir / "scratch_history.csv", out.scratch.result.history);
        write_curves_csv(dir / "curves.csv", assemble_curves(out.transfer.result.history, out.scratch.result.history));
        write_json(dir / "transfer_eval.json", *out.transfer.evaluation);
        write_json(dir / "scratch_eval.json", *out.scratch.evaluation);
        save_checkpoint(dir / "transfer_checkpoint.pnck",
                        Checkpoint{out.transfer.result.bank,
                                   {{"best", out.transfer.result.best.genotype}, {"source_best", source.best.genotype}}});
        save_checkpoint(dir / "scratch_checkpoint.pnck",
                        Checkpoint{out.scratch.result.bank, {{"best", out.scratch.result.best.genotype}}});
        if (stats) {
            write_json(dir / "norm_stats.json", norm_json(*stats));
        }
        const nlohmann::json curves{{"transfer_history", "transfer_history.csv"},
                                    {"scratch_history", "scratch_history.csv"},
                                    {"paired", "curves.csv"},
                                    {"source_history", "../../source/history.csv"}};
        write_json(dir / "transfer_report.json", transfer_report(source, out, curves));
        summary["folds"].push_back({{"name", fold.name},
                                    {"dir", fs::relative(dir, config.output_dir).generic_string()},
                                    {"frozen_intact", out.frozen_intact()},
                                    {"transfer", level_summary(*out.transfer.evaluation)},
                                    {"scratch", level_summary(*out.scratch.evaluation)}});
        std::cout << "transfer: fold " << fold.name << " transfer WAR " << out.transfer.evaluation->segments.war
                  << " scratch WAR " << out.scratch.evaluation->segments.war << '\n';
    }
    summary["frozen_intact"] = intact;
    write_json(config.output_dir / "summary.json", summary);
    if (!intact) {
        std::cerr << "transfer: frozen source modules changed during destination training\n";
        return kExitRuntime;
    }
    return kExitOk;
}

int cmd_synth(const ExperimentConfig& config)
{
    prepare_run_dir(config, "synth");
    const SyntheticSpec spec = config.synthetic.value_or(SyntheticSpec{});
    const SyntheticPair pair = gen_synthetic(spec, config.seeds.synthetic);
    write_synthetic_task(pair.source, config.output_dir / "source");
    write_synthetic_task(pair.destination, config.output_dir / "destination");
    std::cout << "synth: " << pair.source.manifest.rows.size() << " source and "
              << pair.destination.manifest.rows.size() << " destination utterances\n";
    return kExitOk;
}

int cmd_report(const fs::path& run_dir)
{
    if (!fs::is_directory(run_dir)) {
        throw ConfigError("run directory " + run_dir.string() + " does not exist");
    }
    const nlohmann::json report = build_report(run_dir, run_dir / "report");
    validate_report(report);
    std::cout << "report: " << report.at("folds").size() << " folds written to " << (run_dir / "report").string()
              << '\n';
    return kExitOk;
}

int run(int argc, char** argv)
{
    CLI::App app{"PathNet transfer learning experiments"};
    app.require_subcommand(1);
    CommandOptions options;
    std::string config_path;
    std::string out_path;
    std::uint64_t seed = 0;
    std::string folds;
    std::string run_dir;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "experiment config (JSON)")->required();
        sub->add_option("--out", out_path, "output directory (overrides output_dir)");
        sub->add_option("--seed", seed, "base seed (overrides seed and seeds)");
        sub->add_option("--folds", folds, "losocv | kfold:K, optionally @i,j to run selected folds");
    };
    CLI::App* extract = app.add_subcommand("extract", "WAV manifest to feature caches");
    CLI::App* train = app.add_subcommand("train", "evolve on each fold of a dataset");
    CLI::App* transfer = app.add_subcommand("transfer", "source evolution then transfer vs scratch per fold");
    CLI::App* synth = app.add_subcommand("synth", "write a synthetic source/destination pair");
    for (CLI::App* sub : {extract, train, transfer, synth}) {
        add_common(sub);
    }
    CLI::App* report = app.add_subcommand("report", "consolidate a finished run directory");
    report->add_option("run_dir", run_dir, "run directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (report->parsed()) {
            return cmd_report(run_dir);
        }
        options.config = config_path;
        for (CLI::App* sub : {extract, train, transfer, synth}) {
            if (!sub->parsed()) {
                continue;
            }
            if (sub->count("--out")) {
                options.out = out_path;
            }
            if (sub->count("--seed")) {
                options.seed = seed;
            }
            if (sub->count("--folds")) {
                options.folds = folds;
            }
        }
        const ExperimentConfig config = load_config(options);
        if (extract->parsed()) {
            return cmd_extract(config);
        }
        if (train->parsed()) {
            return cmd_train(config);
        }
        if (transfer->parsed()) {
            return cmd_transfer(config);
        }
        return cmd_synth(config);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

}  // namespace pathnet::cli
