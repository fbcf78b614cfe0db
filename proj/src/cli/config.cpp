#include "pathnet/cli/config.hpp"

#include <fstream>
#include <set>

#include "pathnet/error.hpp"
#include "pathnet/rng.hpp"

namespace pathnet::cli {

namespace {

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const std::string& where)
{
    if (!j.is_object()) {
        throw ConfigError(where + " must be a JSON object");
    }
    for (const auto& [key, value] : j.items()) {
        if (!known.contains(key)) {
            throw ConfigError("unknown key '" + key + "' in " + where);
        }
    }
}

std::filesystem::path resolve_path(const std::filesystem::path& base, const std::string& p)
{
    std::filesystem::path path(p);
    return path.is_absolute() ? path : std::filesystem::absolute(base / path).lexically_normal();
}

std::uint64_t sub_seed(std::uint64_t base, std::uint64_t tag)
{
    return splitmix64(base ^ splitmix64(tag));
}

DatasetRef parse_dataset(const nlohmann::json& j, const std::filesystem::path& base, const std::string& where)
{
    reject_unknown(j, {"manifest", "synthetic", "name", "classes", "modality"}, where);
    DatasetRef ref;
    if (j.contains("manifest") == j.contains("synthetic")) {
        throw ConfigError(where + " needs exactly one of 'manifest' or 'synthetic'");
    }
    if (j.contains("manifest")) {
        ref.manifest = resolve_path(base, j.at("manifest").get<std::string>());
        if (!std::filesystem::exists(*ref.manifest)) {
            throw ConfigError(where + ": manifest " + ref.manifest->string() + " does not exist");
        }
    } else {
        ref.synthetic = j.at("synthetic").get<std::string>();
        if (ref.synthetic != "source" && ref.synthetic != "destination") {
            throw ConfigError(where + ": 'synthetic' must be \"source\" or \"destination\"");
        }
    }
    ref.name = j.value("name", std::string{});
    ref.classes = j.value("classes", std::vector<std::string>{});
    ref.modality = j.value("modality", std::string{});
    return ref;
}

nlohmann::json dataset_json(const DatasetRef& ref)
{
    nlohmann::json j;
    if (ref.manifest) {
        j["manifest"] = ref.manifest->string();
    } else {
        j["synthetic"] = ref.synthetic;
    }
    if (!ref.name.empty()) {
        j["name"] = ref.name;
    }
    if (!ref.classes.empty()) {
        j["classes"] = ref.classes;
    }
    if (!ref.modality.empty()) {
        j["modality"] = ref.modality;
    }
    return j;
}

HyperParams merged_hp(const nlohmann::json& base, const nlohmann::json* patch)
{
    nlohmann::json merged = base;
    if (patch) {
        merged.merge_patch(*patch);
    }
    HyperParams hp = merged.get<HyperParams>();
    return hp;
}

}  // namespace

SplitConfig parse_folds(const std::string& spec)
{
    SplitConfig split;
    std::string scheme = spec;
    const auto at = spec.find('@');
    if (at != std::string::npos) {
        scheme = spec.substr(0, at);
        std::string list = spec.substr(at + 1);
        std::size_t pos = 0;
        while (pos <= list.size()) {
            const auto comma = list.find(',', pos);
            const std::string item = list.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
            try {
                std::size_t used = 0;
                const int idx = std::stoi(item, &used);
                if (used != item.size() || idx < 0) {
                    throw std::invalid_argument(item);
                }
                split.only.push_back(idx);
            } catch (const std::exception&) {
                throw ConfigError("--folds: bad fold index '" + item + "'");
            }
            if (comma == std::string::npos) {
                break;
            }
            pos = comma + 1;
        }
    }
    if (scheme == "losocv") {
        split.scheme = "losocv";
        split.k = 0;
    } else if (scheme.rfind("kfold:", 0) == 0) {
        split.scheme = "kfold";
        try {
            split.k = std::stoi(scheme.substr(6));
        } catch (const std::exception&) {
            throw ConfigError("--folds: bad k in '" + spec + "'");
        }
        if (split.k < 2) {
            throw ConfigError("--folds: k must be >= 2");
        }
    } else {
        throw ConfigError("--folds must be 'losocv' or 'kfold:K' (optionally '@i,j'), got '" + spec + "'");
    }
    return split;
}

ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& config_dir,
                              const CommandOptions& options)
{
    reject_unknown(j,
                   {"seed", "seeds", "output_dir", "hyperparams", "hyperparams_source", "hyperparams_destination",
                    "mel", "normalize", "extract", "dataset", "split", "transfer", "synthetic"},
                   "config");
    ExperimentConfig c;
    c.raw = j;
    c.config_dir = std::filesystem::absolute(config_dir).lexically_normal();
    try {
        // Seeds: one explicit base seed, sub-seeds derived unless given.
        if (!options.seed && !j.contains("seed")) {
            throw ConfigError("config must set an explicit 'seed'");
        }
        c.seeds.base = options.seed ? *options.seed : j.at("seed").get<std::uint64_t>();
        c.seeds.split = sub_seed(c.seeds.base, 1);
        c.seeds.train = sub_seed(c.seeds.base, 2);
        c.seeds.source = sub_seed(c.seeds.base, 3);
        // Transfer and baseline share a seed so the comparison is paired.
        c.seeds.destination = sub_seed(c.seeds.base, 4);
        c.seeds.baseline = c.seeds.destination;
        c.seeds.synthetic = sub_seed(c.seeds.base, 5);
        if (j.contains("seeds") && !options.seed) {
            const auto& s = j.at("seeds");
            reject_unknown(s, {"split", "train", "source", "destination", "baseline", "synthetic"}, "seeds");
            c.seeds.split = s.value("split", c.seeds.split);
            c.seeds.train = s.value("train", c.seeds.train);
            c.seeds.source = s.value("source", c.seeds.source);
            c.seeds.destination = s.value("destination", c.seeds.destination);
            c.seeds.baseline = s.value("baseline", c.seeds.baseline);
            c.seeds.synthetic = s.value("synthetic", c.seeds.synthetic);
        }

        if (options.out) {
            c.output_dir = std::filesystem::absolute(*options.out).lexically_normal();
        } else if (j.contains("output_dir")) {
            c.output_dir = resolve_path(c.config_dir, j.at("output_dir").get<std::string>());
        } else {
            throw ConfigError("no output directory: set 'output_dir' or pass --out");
        }

        const nlohmann::json base_hp = j.value("hyperparams", nlohmann::json::object());
        const nlohmann::json* src_patch = j.contains("hyperparams_source") ? &j.at("hyperparams_source") : nullptr;
        const nlohmann::json* dst_patch =
            j.contains("hyperparams_destination") ? &j.at("hyperparams_destination") : nullptr;
        c.input_dim_explicit = base_hp.contains("input_dim") || (src_patch && src_patch->contains("input_dim")) ||
                               (dst_patch && dst_patch->contains("input_dim"));
        c.hp_source = merged_hp(base_hp, src_patch);
        c.hp_dest = merged_hp(base_hp, dst_patch);
        c.hp_source.validate();
        c.hp_dest.validate();

        if (j.contains("mel")) {
            c.mel = j.at("mel").get<audio::MelConfig>();
        }
        c.mel.validate();
        c.normalize = j.value("normalize", true);

        if (j.contains("extract")) {
            const auto& e = j.at("extract");
            reject_unknown(e, {"manifest", "cache_dir"}, "extract");
            ExtractConfig ex;
            ex.manifest = resolve_path(c.config_dir, e.at("manifest").get<std::string>());
            if (!std::filesystem::exists(ex.manifest)) {
                throw ConfigError("extract: manifest " + ex.manifest.string() + " does not exist");
            }
            ex.cache_dir = e.contains("cache_dir") ? resolve_path(c.config_dir, e.at("cache_dir").get<std::string>())
                                                   : c.output_dir / "features";
            c.extract = ex;
        }
        if (j.contains("dataset")) {
            c.dataset = parse_dataset(j.at("dataset"), c.config_dir, "dataset");
        }
        if (j.contains("split")) {
            const auto& s = j.at("split");
            reject_unknown(s, {"scheme", "k", "folds"}, "split");
            c.split.scheme = s.value("scheme", c.split.scheme);
            c.split.k = s.value("k", c.split.k);
            c.split.only = s.value("folds", std::vector<int>{});
            if (c.split.scheme != "kfold" && c.split.scheme != "losocv") {
                throw ConfigError("split.scheme must be 'kfold' or 'losocv'");
            }
            if (c.split.scheme == "kfold" && c.split.k < 2) {
                throw ConfigError("split.k must be >= 2");
            }
        }
        if (options.folds) {
            c.split = parse_folds(*options.folds);
        }
        if (j.contains("transfer")) {
            const auto& t = j.at("transfer");
            reject_unknown(t, {"sources", "destination", "shared_label_space", "drop_unshared"}, "transfer");
            TransferConfig tc;
            int i = 0;
            for (const auto& s : t.at("sources")) {
                tc.sources.push_back(parse_dataset(s, c.config_dir, "transfer.sources[" + std::to_string(i++) + "]"));
            }
            if (tc.sources.empty()) {
                throw ConfigError("transfer.sources must list at least one dataset");
            }
            tc.destination = parse_dataset(t.at("destination"), c.config_dir, "transfer.destination");
            tc.shared_label_space = t.value("shared_label_space", std::vector<std::string>{});
            tc.drop_unshared = t.value("drop_unshared", false);
            c.transfer = tc;
        }
        if (j.contains("synthetic")) {
            c.synthetic = j.at("synthetic").get<SyntheticSpec>();
            c.synthetic->validate();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return c;
}

ExperimentConfig load_config(const CommandOptions& options)
{
    std::ifstream in(options.config);
    if (!in) {
        throw ConfigError("cannot open config " + options.config.string());
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in, nullptr, true, true);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(options.config.string() + ": " + e.what());
    }
    return parse_config(j, options.config.parent_path().empty() ? std::filesystem::path(".") : options.config.parent_path(),
                        options);
}

nlohmann::json ExperimentConfig::resolved() const
{
    nlohmann::json j;
    j["seed"] = seeds.base;
    j["seeds"] = {{"split", seeds.split},
                  {"train", seeds.train},
                  {"source", seeds.source},
                  {"destination", seeds.destination},
                  {"baseline", seeds.baseline},
                  {"synthetic", seeds.synthetic}};
    j["output_dir"] = output_dir.string();
    j["hyperparams_source"] = hp_source;
    j["hyperparams_destination"] = hp_dest;
    j["input_dim_explicit"] = input_dim_explicit;
    j["mel"] = mel;
    j["normalize"] = normalize;
    if (extract) {
        j["extract"] = {{"manifest", extract->manifest.string()}, {"cache_dir", extract->cache_dir.string()}};
    }
    if (dataset) {
        j["dataset"] = dataset_json(*dataset);
    }
    j["split"] = {{"scheme", split.scheme}, {"k", split.k}, {"folds", split.only}};
    if (transfer) {
        nlohmann::json sources = nlohmann::json::array();
        for (const auto& s : transfer->sources) {
            sources.push_back(dataset_json(s));
        }
        j["transfer"] = {{"sources", sources},
                         {"destination", dataset_json(transfer->destination)},
                         {"shared_label_space", transfer->shared_label_space},
                         {"drop_unshared", transfer->drop_unshared}};
    }
    if (synthetic) {
        j["synthetic"] = *synthetic;
    }
    return j;
}

}  // namespace pathnet::cli
