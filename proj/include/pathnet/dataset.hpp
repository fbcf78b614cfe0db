#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace pathnet {

enum class Modality { AudioSegments, ImageFrames };

std::string to_string(Modality m);
Modality parse_modality(const std::string& text);

struct ManifestRow {
    std::string path;
    std::string label;
    std::string subject;
    std::string utterance;
};

/// CSV manifest with header `path,label,subject,utterance`. Relative paths
/// resolve against `base_dir` (the directory holding the CSV).
struct DatasetManifest {
    std::string name;
    std::vector<std::string> class_list;
    std::vector<ManifestRow> rows;
    Modality modality = Modality::AudioSegments;
    std::filesystem::path base_dir;

    /// Throws DataError naming the offending label.
    int class_index(const std::string& label) const;
    std::filesystem::path resolve(const ManifestRow& row) const;
    /// Label membership; for audio manifests also utterance uniqueness per subject.
    void validate() const;
};

/// Reads a manifest. When `class_list` is empty the sorted distinct labels
/// are used. Modality follows the file extension of the first row (.ppm
/// means image frames) unless `modality` is given.
DatasetManifest read_manifest(const std::filesystem::path& csv, const std::string& name = {},
                              const std::vector<std::string>& class_list = {},
                              const std::string& modality = {});
void write_manifest(const std::filesystem::path& csv, const DatasetManifest& manifest);

/// In-memory samples. Each manifest row contributes one or more samples
/// (the segments of an utterance, or a single frame); `rows[i]` records
/// which manifest row sample i came from.
class Dataset {
public:
    std::string name;
    std::vector<std::string> classes;
    std::size_t dim = 0;
    std::size_t channels = 1;

    std::size_t size() const { return labels_.size(); }
    bool empty() const { return labels_.empty(); }
    std::span<const float> sample(std::size_t i) const;
    std::span<const float> features() const { return features_; }
    std::span<float> features() { return features_; }
    int label(std::size_t i) const { return labels_[i]; }
    std::span<const int> labels() const { return labels_; }
    const std::string& subject(std::size_t i) const { return subjects_[i]; }
    const std::string& utterance(std::size_t i) const { return utterances_[i]; }
    std::size_t row(std::size_t i) const { return rows_[i]; }
    /// "subject/utterance"; groups segments for utterance-level decisions.
    std::string utterance_key(std::size_t i) const { return subjects_[i] + "/" + utterances_[i]; }

    void add_sample(std::span<const float> values, int label, std::string subject, std::string utterance,
                    std::size_t row);
    void relabel(std::size_t i, int label) { labels_[i] = label; }
    void set_subject(std::size_t i, std::string subject) { subjects_[i] = std::move(subject); }

    Dataset subset(std::span<const std::size_t> indices) const;
    /// Samples whose manifest row is in `rows`, in sample order.
    Dataset select_rows(std::span<const std::size_t> rows) const;
    std::vector<std::string> distinct_subjects() const;

private:
    std::vector<float> features_;
    std::vector<int> labels_;
    std::vector<std::string> subjects_;
    std::vector<std::string> utterances_;
    std::vector<std::size_t> rows_;
};

/// Loads every row: feature caches contribute one sample per segment,
/// binary PPM (P6) frames contribute one sample in channel-major order
/// scaled to [0, 1].
Dataset load_dataset(const DatasetManifest& manifest);

/// Per-channel z-score statistics, computed on training data only.
struct NormStats {
    std::vector<double> mean;
    std::vector<double> stddev;
};

inline constexpr double kStdFloor = 1e-8;

/// Channels are contiguous equal blocks of each sample.
NormStats compute_norm_stats(const Dataset& train);
void apply_norm_stats(Dataset& data, const NormStats& stats);

}  // namespace pathnet
