#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gdm {

using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Immutable labelled feature matrix.
///
/// Invariants (checked on construction): n >= 1, d >= 1, m >= 2, every label in
/// [0, m), every class present at least once, all features finite.
class Dataset {
public:
    Dataset(FeatureMatrix features, std::vector<int> labels, std::vector<std::string> class_names,
            std::vector<std::string> feature_names);

    [[nodiscard]] std::size_t size() const { return labels_.size(); }
    [[nodiscard]] std::size_t num_features() const { return static_cast<std::size_t>(features_.cols()); }
    [[nodiscard]] std::size_t num_classes() const { return class_names_.size(); }

    [[nodiscard]] const FeatureMatrix& features() const { return features_; }
    [[nodiscard]] std::span<const double> row(std::size_t i) const {
        return {features_.data() + i * num_features(), num_features()};
    }
    [[nodiscard]] int label(std::size_t i) const { return labels_[i]; }
    [[nodiscard]] const std::vector<int>& labels() const { return labels_; }
    [[nodiscard]] const std::vector<std::string>& class_names() const { return class_names_; }
    [[nodiscard]] const std::vector<std::string>& feature_names() const { return feature_names_; }

    [[nodiscard]] std::vector<std::size_t> class_counts() const;

    /// Rows in the given order; class and feature names are kept.
    [[nodiscard]] Dataset subset(std::span<const std::size_t> rows) const;

    /// Same labels and names with a replacement feature matrix of equal shape.
    [[nodiscard]] Dataset with_features(FeatureMatrix features) const;

private:
    FeatureMatrix features_;
    std::vector<int> labels_;
    std::vector<std::string> class_names_;
    std::vector<std::string> feature_names_;
};

// ---------------------------------------------------------------------------
// CSV ingestion

/// A column given either by 0-based index or by header name.
struct ColumnRef {
    std::string name;
    std::size_t index = 0;
    bool by_name = false;

    static ColumnRef parse(std::string_view token);
};

enum class Delimiter { comma, whitespace };

struct CsvOptions {
    /// Empty optional means the last column.
    std::optional<ColumnRef> label_column;
    bool header = false;
    Delimiter delimiter = Delimiter::comma;
    std::vector<ColumnRef> drop_columns;
    /// Raw label text -> class name; when non-empty every label must be mapped.
    std::map<std::string, std::string> label_map;
};

/// Labels are mapped to 0..m-1 in order of first appearance.
Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options = {});
Dataset read_csv(std::istream& in, const CsvOptions& options = {}, const std::string& source = "<stream>");

/// Header row of feature names plus "class"; label written as its class name, last.
void write_csv(const Dataset& ds, std::ostream& out);
void write_csv(const Dataset& ds, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Splitting

enum class SplitRounding { half_up, down, up };

SplitRounding parse_split_rounding(std::string_view s);
std::string to_string(SplitRounding r);

struct SplitPair {
    Dataset train;
    Dataset test;
    std::uint64_t seed = 0;
    double train_fraction = 0.0;
    std::vector<std::size_t> train_rows;  // source row indices, ascending
    std::vector<std::size_t> test_rows;
};

/// Per-class shuffle and cut. Each class contributes round(fraction * n_c)
/// rows to train, clamped to [1, n_c - 1]. Throws DataError when a class has
/// fewer than two rows.
SplitPair stratified_split(const Dataset& ds, double train_fraction, std::uint64_t seed,
                           SplitRounding rounding = SplitRounding::half_up);

/// Plain shuffle-and-cut over all rows. Throws DataError if either side ends up
/// missing a class.
SplitPair random_split(const Dataset& ds, double train_fraction, std::uint64_t seed,
                       SplitRounding rounding = SplitRounding::half_up);

// ---------------------------------------------------------------------------
// Standardization

struct Scaler {
    std::vector<double> mean;
    std::vector<double> stddev;  // population stddev; 0 marks a constant column

    [[nodiscard]] Dataset transform(const Dataset& ds) const;
    void transform_row(std::span<double> x) const;
};

Scaler fit_scaler(const Dataset& train);

struct StandardizedPair {
    Dataset train;
    Dataset test;
    Scaler scaler;
};

/// Fit on train, apply the same statistics to both.
StandardizedPair standardize(const Dataset& train, const Dataset& test);

// ---------------------------------------------------------------------------
// Dataset manifests
//
// Plain "key = value" lines, '#' comments. Keys: name, path, label_column
// (index, header name or "last"), header, delimiter (comma|whitespace),
// drop_columns (comma list), label_map (comma list of raw:name), url, sha256.
// A relative path is resolved against the manifest's directory.

struct DatasetManifest {
    std::string name;
    std::filesystem::path path;
    CsvOptions csv;
    std::string url;
    std::string sha256;
};

DatasetManifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir,
                               const std::string& source = "<manifest>");
DatasetManifest load_manifest(const std::filesystem::path& path);
Dataset load_dataset(const DatasetManifest& manifest);

}  // namespace gdm
