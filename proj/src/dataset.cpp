#include "pathnet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "pathnet/error.hpp"
#include "pathnet/feature_cache.hpp"

namespace pathnet {

std::string to_string(Modality m)
{
    return m == Modality::ImageFrames ? "image-frames" : "audio-segments";
}

Modality parse_modality(const std::string& text)
{
    if (text == "audio-segments") {
        return Modality::AudioSegments;
    }
    if (text == "image-frames") {
        return Modality::ImageFrames;
    }
    throw ConfigError("unknown modality '" + text + "'");
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field += c;
        }
    }
    fields.push_back(std::move(field));
    return fields;
}

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        out += c;
        if (c == '"') {
            out += '"';
        }
    }
    return out + "\"";
}

}  // namespace

int DatasetManifest::class_index(const std::string& label) const
{
    auto it = std::find(class_list.begin(), class_list.end(), label);
    if (it == class_list.end()) {
        throw DataError("dataset '" + name + "': label '" + label + "' not in class list");
    }
    return static_cast<int>(it - class_list.begin());
}

std::filesystem::path DatasetManifest::resolve(const ManifestRow& row) const
{
    std::filesystem::path p(row.path);
    return p.is_absolute() ? p : base_dir / p;
}

void DatasetManifest::validate() const
{
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& row : rows) {
        class_index(row.label);
        if (modality == Modality::AudioSegments && !seen.emplace(row.subject, row.utterance).second) {
            throw DataError("dataset '" + name + "': utterance '" + row.utterance + "' repeated for subject '" +
                            row.subject + "'");
        }
    }
}

DatasetManifest read_manifest(const std::filesystem::path& csv, const std::string& name,
                              const std::vector<std::string>& class_list, const std::string& modality)
{
    std::ifstream in(csv);
    if (!in) {
        throw DataError("cannot open manifest " + csv.string());
    }
    DatasetManifest m;
    m.name = name.empty() ? csv.stem().string() : name;
    m.base_dir = csv.parent_path();
    std::string line;
    if (!std::getline(in, line)) {
        throw DataError(csv.string() + ": empty manifest");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (split_csv_line(line) != std::vector<std::string>{"path", "label", "subject", "utterance"}) {
        throw DataError(csv.string() + ": header must be 'path,label,subject,utterance'");
    }
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        auto f = split_csv_line(line);
        if (f.size() != 4) {
            throw DataError(csv.string() + ":" + std::to_string(line_no) + ": expected 4 fields");
        }
        m.rows.push_back({f[0], f[1], f[2], f[3]});
    }
    if (class_list.empty()) {
        std::set<std::string> labels;
        for (const auto& r : m.rows) {
            labels.insert(r.label);
        }
        m.class_list.assign(labels.begin(), labels.end());
    } else {
        m.class_list = class_list;
    }
    if (!modality.empty()) {
        m.modality = parse_modality(modality);
    } else if (!m.rows.empty() && std::filesystem::path(m.rows.front().path).extension() == ".ppm") {
        m.modality = Modality::ImageFrames;
    }
    m.validate();
    return m;
}

void write_manifest(const std::filesystem::path& csv, const DatasetManifest& manifest)
{
    std::ofstream out(csv, std::ios::trunc);
    if (!out) {
        throw Error("cannot write manifest " + csv.string());
    }
    out << "path,label,subject,utterance\n";
    for (const auto& r : manifest.rows) {
        out << csv_field(r.path) << ',' << csv_field(r.label) << ',' << csv_field(r.subject) << ','
            << csv_field(r.utterance) << '\n';
    }
}

std::span<const float> Dataset::sample(std::size_t i) const
{
    return std::span<const float>(features_).subspan(i * dim, dim);
}

void Dataset::add_sample(std::span<const float> values, int label, std::string subject, std::string utterance,
                         std::size_t row)
{
    if (dim == 0 && labels_.empty()) {
        dim = values.size();
    }
    if (values.size() != dim) {
        throw DataError("dataset '" + name + "': sample of length " + std::to_string(values.size()) +
                        " in a dataset of dimension " + std::to_string(dim));
    }
    features_.insert(features_.end(), values.begin(), values.end());
    labels_.push_back(label);
    subjects_.push_back(std::move(subject));
    utterances_.push_back(std::move(utterance));
    rows_.push_back(row);
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const
{
    Dataset out;
    out.name = name;
    out.classes = classes;
    out.dim = dim;
    out.channels = channels;
    out.features_.reserve(indices.size() * dim);
    for (std::size_t i : indices) {
        out.add_sample(sample(i), labels_[i], subjects_[i], utterances_[i], rows_[i]);
    }
    return out;
}

Dataset Dataset::select_rows(std::span<const std::size_t> rows) const
{
    const std::set<std::size_t> wanted(rows.begin(), rows.end());
    std::vector<std::size_t> indices;
    for (std::size_t i = 0; i < size(); ++i) {
        if (wanted.contains(rows_[i])) {
            indices.push_back(i);
        }
    }
    return subset(indices);
}

std::vector<std::string> Dataset::distinct_subjects() const
{
    std::set<std::string> s(subjects_.begin(), subjects_.end());
    return {s.begin(), s.end()};
}

namespace {

std::vector<float> read_ppm(const std::filesystem::path& path, std::size_t& channels)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open frame " + path.string());
    }
    auto token = [&]() {
        std::string t;
        char c;
        while (in.get(c)) {
            if (c == '#') {
                std::string skip;
                std::getline(in, skip);
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                if (!t.empty()) {
                    break;
                }
            } else {
                t += c;
            }
        }
        return t;
    };
    if (token() != "P6") {
        throw DataError(path.string() + ": only binary PPM (P6) frames are supported");
    }
    int width = 0;
    int height = 0;
    int maxval = 0;
    try {
        width = std::stoi(token());
        height = std::stoi(token());
        maxval = std::stoi(token());
    } catch (const std::exception&) {
        throw DataError(path.string() + ": malformed PPM header");
    }
    if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 255) {
        throw DataError(path.string() + ": unsupported PPM geometry or depth");
    }
    const std::size_t pixels = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    std::vector<unsigned char> raw(pixels * 3);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!in) {
        throw DataError(path.string() + ": truncated PPM pixel data");
    }
    channels = 3;
    std::vector<float> out(pixels * 3);
    for (std::size_t p = 0; p < pixels; ++p) {
        for (std::size_t c = 0; c < 3; ++c) {
            out[c * pixels + p] = static_cast<float>(raw[p * 3 + c]) / static_cast<float>(maxval);
        }
    }
    return out;
}

}  // namespace

Dataset load_dataset(const DatasetManifest& manifest)
{
    Dataset data;
    data.name = manifest.name;
    data.classes = manifest.class_list;
    bool first = true;
    for (std::size_t r = 0; r < manifest.rows.size(); ++r) {
        const auto& row = manifest.rows[r];
        const int label = manifest.class_index(row.label);
        const auto path = manifest.resolve(row);
        std::size_t channels = 1;
        if (path.extension() == ".ppm") {
            auto frame = read_ppm(path, channels);
            data.add_sample(frame, label, row.subject, row.utterance, r);
        } else {
            FeatureCache cache = read_feature_cache(path);
            channels = cache.channels();
            const std::size_t seg = cache.segment_size();
            for (std::size_t s = 0; s < cache.segments(); ++s) {
                data.add_sample(std::span<const float>(cache.values).subspan(s * seg, seg), label, row.subject,
                                row.utterance, r);
            }
        }
        if (first) {
            data.channels = channels;
            first = false;
        } else if (channels != data.channels) {
            throw DataError(path.string() + ": channel count differs from earlier rows");
        }
    }
    return data;
}

NormStats compute_norm_stats(const Dataset& train)
{
    if (train.empty()) {
        throw DataError("cannot compute normalization statistics on an empty dataset");
    }
    const std::size_t channels = train.channels;
    if (channels == 0 || train.dim % channels != 0) {
        throw DataError("sample dimension is not divisible by the channel count");
    }
    const std::size_t block = train.dim / channels;
    NormStats stats;
    stats.mean.assign(channels, 0.0);
    stats.stddev.assign(channels, 0.0);
    const double n = static_cast<double>(train.size() * block);
    for (std::size_t i = 0; i < train.size(); ++i) {
        auto x = train.sample(i);
        for (std::size_t c = 0; c < channels; ++c) {
            for (std::size_t k = 0; k < block; ++k) {
                stats.mean[c] += x[c * block + k];
            }
        }
    }
    for (double& m : stats.mean) {
        m /= n;
    }
    std::vector<double> ss(channels, 0.0);
    for (std::size_t i = 0; i < train.size(); ++i) {
        auto x = train.sample(i);
        for (std::size_t c = 0; c < channels; ++c) {
            for (std::size_t k = 0; k < block; ++k) {
                const double d = x[c * block + k] - stats.mean[c];
                ss[c] += d * d;
            }
        }
    }
    for (std::size_t c = 0; c < channels; ++c) {
        stats.stddev[c] = std::max(std::sqrt(ss[c] / n), kStdFloor);
    }
    return stats;
}

void apply_norm_stats(Dataset& data, const NormStats& stats)
{
    const std::size_t channels = stats.mean.size();
    if (channels != data.channels || stats.stddev.size() != channels) {
        throw DataError("normalization statistics do not match dataset channel count");
    }
    if (data.empty()) {
        return;
    }
    const std::size_t block = data.dim / channels;
    auto values = data.features();
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (std::size_t c = 0; c < channels; ++c) {
            const double mean = stats.mean[c];
            const double sd = std::max(stats.stddev[c], kStdFloor);
            for (std::size_t k = 0; k < block; ++k) {
                float& v = values[i * data.dim + c * block + k];
                v = static_cast<float>((v - mean) / sd);
            }
        }
    }
}

}  // namespace pathnet
