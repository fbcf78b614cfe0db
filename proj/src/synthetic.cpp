#include "pathnet/synthetic.hpp"

#include <cmath>
#include <map>
#include <set>

#include "pathnet/error.hpp"
#include "pathnet/feature_cache.hpp"
#include "pathnet/rng.hpp"

namespace pathnet {

void SyntheticSpec::validate() const
{
    if (num_classes < 1 || samples_per_class < 1) {
        throw ConfigError("synthetic spec needs at least one class and one sample per class");
    }
    if (dim < 2 * num_classes) {
        throw ConfigError("synthetic spec: dim must be >= 2 * num_classes for orthonormal prototypes");
    }
    if (destination_samples_per_class < 0 || subjects < 1 || segments_per_utterance < 1) {
        throw ConfigError("synthetic spec: counts must be positive");
    }
    if (!(relatedness >= 0.0 && relatedness <= 1.0)) {
        throw ConfigError("synthetic spec: relatedness must lie in [0, 1]");
    }
    if (!(noise >= 0.0) || !(subject_shift >= 0.0)) {
        throw ConfigError("synthetic spec: noise and subject_shift must be >= 0");
    }
}

void to_json(nlohmann::json& j, const SyntheticSpec& s)
{
    j = {{"num_classes", s.num_classes},
         {"dim", s.dim},
         {"samples_per_class", s.samples_per_class},
         {"destination_samples_per_class", s.destination_samples_per_class},
         {"subjects", s.subjects},
         {"relatedness", s.relatedness},
         {"noise", s.noise},
         {"subject_shift", s.subject_shift},
         {"segments_per_utterance", s.segments_per_utterance}};
}

void from_json(const nlohmann::json& j, SyntheticSpec& s)
{
    static const std::set<std::string> known = {"num_classes", "dim", "samples_per_class",
                                                "destination_samples_per_class", "subjects", "relatedness",
                                                "noise", "subject_shift", "segments_per_utterance"};
    for (const auto& [key, value] : j.items()) {
        if (!known.contains(key)) {
            throw ConfigError("unknown synthetic setting '" + key + "'");
        }
    }
    try {
        s.num_classes = j.value("num_classes", s.num_classes);
        s.dim = j.value("dim", s.dim);
        s.samples_per_class = j.value("samples_per_class", s.samples_per_class);
        s.destination_samples_per_class = j.value("destination_samples_per_class", s.destination_samples_per_class);
        s.subjects = j.value("subjects", s.subjects);
        s.relatedness = j.value("relatedness", s.relatedness);
        s.noise = j.value("noise", s.noise);
        s.subject_shift = j.value("subject_shift", s.subject_shift);
        s.segments_per_utterance = j.value("segments_per_utterance", s.segments_per_utterance);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("synthetic spec: ") + e.what());
    }
}

namespace {

std::vector<double> gaussian_vector(Rng& rng, std::size_t dim, double scale)
{
    std::vector<double> v(dim);
    for (double& x : v) {
        x = scale * rng.normal();
    }
    return v;
}

/// Modified Gram-Schmidt on `count` Gaussian draws.
std::vector<std::vector<double>> orthonormal_basis(Rng& rng, std::size_t dim, std::size_t count)
{
    std::vector<std::vector<double>> basis;
    while (basis.size() < count) {
        auto v = gaussian_vector(rng, dim, 1.0);
        for (const auto& b : basis) {
            double dot = 0.0;
            for (std::size_t i = 0; i < dim; ++i) {
                dot += v[i] * b[i];
            }
            for (std::size_t i = 0; i < dim; ++i) {
                v[i] -= dot * b[i];
            }
        }
        double norm = 0.0;
        for (double x : v) {
            norm += x * x;
        }
        norm = std::sqrt(norm);
        if (norm < 1e-9) {
            continue;
        }
        for (double& x : v) {
            x /= norm;
        }
        basis.push_back(std::move(v));
    }
    return basis;
}

SyntheticTask make_task(const std::string& name, const SyntheticSpec& spec, int per_class,
                        std::vector<std::vector<double>> prototypes, Rng& rng)
{
    const auto dim = static_cast<std::size_t>(spec.dim);
    const double coord_noise = spec.noise / std::sqrt(static_cast<double>(dim));
    const double coord_shift = spec.subject_shift / std::sqrt(static_cast<double>(dim));

    SyntheticTask task;
    task.prototypes = std::move(prototypes);
    task.manifest.name = name;
    task.manifest.modality = Modality::AudioSegments;
    for (int c = 0; c < spec.num_classes; ++c) {
        task.manifest.class_list.push_back("c" + std::to_string(c));
    }
    task.data.name = name;
    task.data.classes = task.manifest.class_list;
    task.data.dim = dim;
    task.data.channels = 1;

    std::vector<std::vector<double>> offsets;
    for (int s = 0; s < spec.subjects; ++s) {
        offsets.push_back(gaussian_vector(rng, dim, coord_shift));
    }

    // Segments of one (class, subject) are grouped into utterances of
    // segments_per_utterance consecutive samples.
    std::map<std::pair<int, int>, int> emitted;
    std::map<std::pair<std::string, std::string>, std::size_t> row_of;
    std::vector<float> x(dim);
    for (int c = 0; c < spec.num_classes; ++c) {
        for (int j = 0; j < per_class; ++j) {
            const int s = j % spec.subjects;
            const int n = emitted[{c, s}]++;
            const std::string subject = "s" + std::to_string(s);
            const std::string utterance =
                "c" + std::to_string(c) + "_u" + std::to_string(n / spec.segments_per_utterance);
            auto [it, inserted] = row_of.emplace(std::make_pair(subject, utterance), task.manifest.rows.size());
            if (inserted) {
                task.manifest.rows.push_back({subject + "_" + utterance + ".pnfc", task.manifest.class_list[static_cast<std::size_t>(c)],
                                              subject, utterance});
            }
            const auto& proto = task.prototypes[static_cast<std::size_t>(c)];
            const auto& off = offsets[static_cast<std::size_t>(s)];
            for (std::size_t i = 0; i < dim; ++i) {
                x[i] = static_cast<float>(proto[i] + off[i] + coord_noise * rng.normal());
            }
            task.data.add_sample(x, c, subject, utterance, it->second);
        }
    }
    return task;
}

}  // namespace

SyntheticPair gen_synthetic(const SyntheticSpec& spec, std::uint64_t seed)
{
    spec.validate();
    Rng rng(seed);
    const auto classes = static_cast<std::size_t>(spec.num_classes);
    const auto dim = static_cast<std::size_t>(spec.dim);
    auto basis = orthonormal_basis(rng, dim, 2 * classes);

    std::vector<std::vector<double>> source(basis.begin(), basis.begin() + static_cast<std::ptrdiff_t>(classes));
    std::vector<std::vector<double>> destination(classes, std::vector<double>(dim));
    const double rho = spec.relatedness;
    const double fresh = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    for (std::size_t c = 0; c < classes; ++c) {
        for (std::size_t i = 0; i < dim; ++i) {
            destination[c][i] = rho * basis[c][i] + fresh * basis[classes + c][i];
        }
    }

    SyntheticPair pair;
    pair.source = make_task("source", spec, spec.samples_per_class, std::move(source), rng);
    const int dest_count =
        spec.destination_samples_per_class > 0 ? spec.destination_samples_per_class : spec.samples_per_class;
    pair.destination = make_task("destination", spec, dest_count, std::move(destination), rng);
    return pair;
}

void write_synthetic_task(const SyntheticTask& task, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    const auto& data = task.data;
    std::vector<FeatureCache> caches(task.manifest.rows.size());
    for (std::size_t r = 0; r < caches.size(); ++r) {
        caches[r].utterance_id = task.manifest.rows[r].subject + "/" + task.manifest.rows[r].utterance;
        caches[r].channel_order = {"value"};
        caches[r].meta = {{"generator", "synthetic"}, {"label", task.manifest.rows[r].label}};
    }
    std::vector<int> counts(caches.size(), 0);
    for (std::size_t i = 0; i < data.size(); ++i) {
        auto x = data.sample(i);
        auto& cache = caches[data.row(i)];
        cache.values.insert(cache.values.end(), x.begin(), x.end());
        ++counts[data.row(i)];
    }
    for (std::size_t r = 0; r < caches.size(); ++r) {
        caches[r].shape = {counts[r], static_cast<int>(data.dim)};
        write_feature_cache(dir / task.manifest.rows[r].path, caches[r]);
    }
    write_manifest(dir / "manifest.csv", task.manifest);
}

}  // namespace pathnet
