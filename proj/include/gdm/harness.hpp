#pragma once

// Experiment runner: for every (dataset, seed) cell, split, standardize, fit a
// committee, and score both the members and the ensemble on the held-out rows.

#include "gdm/data.hpp"
#include "gdm/ensemble.hpp"
#include "gdm/learners.hpp"
#include "gdm/metrics.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace gdm {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ReportFormat { csv, markdown, json };

ReportFormat parse_report_format(std::string_view s);
std::string to_string(ReportFormat f);

/// validation:F | resubstitution | external-test
struct ProtocolChoice {
    WeightProtocol::Kind kind = WeightProtocol::Kind::validation;
    double fraction = 0.25;

    static ProtocolChoice parse(std::string_view s);
    [[nodiscard]] std::string to_string() const;
    [[nodiscard]] bool leaks_test_labels() const { return kind == WeightProtocol::Kind::external; }
};

/// "0-9", "1,2,5", "0-4,10"; ascending order is not required, duplicates are rejected.
std::vector<std::uint64_t> parse_seed_list(std::string_view s);

struct ExperimentConfig {
    std::vector<DatasetManifest> datasets;
    std::vector<LearnerSpec> learners;
    double split = 0.8;
    std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    ProtocolChoice protocol;
    RatingMode rating = RatingMode::scores;
    AccuracyMode accuracy_mode = AccuracyMode::overall;
    SplitRounding rounding = SplitRounding::half_up;
    bool stratified = true;
    std::size_t jobs = 0;  // 0 = hardware concurrency
    std::filesystem::path out_dir;
    ReportFormat format = ReportFormat::markdown;
    bool save_committees = false;
    bool paper_protocol = false;

    /// Throws ConfigError on an empty dataset/learner/seed list or a split outside (0, 1).
    void validate() const;
};

/// The four mandatory learners with default hyperparameters.
std::vector<LearnerSpec> default_roster();
/// SVM, BP, LR, KNN, RF, ELM.
std::vector<LearnerSpec> paper_roster();

/// Single seed, test-set weights, one-hot ratings, six-learner roster.
void apply_paper_protocol(ExperimentConfig& cfg);

/// Resolves a dataset argument: an existing manifest path, or a bare name
/// looked up as <manifest_dir>/<name>.manifest.
DatasetManifest resolve_dataset(std::string_view name_or_path, const std::filesystem::path& manifest_dir);

/// Section-based config text:
///
///   [experiment]   split, seeds, weight_protocol, rating, accuracy_mode,
///                  split_rounding, stratified, jobs, out, format,
///                  save_committees, manifest_dir, paper_protocol
///   [datasets]     one entry per line: a bare name or `name = manifest path`
///   [learner KIND] hyperparameters, plus optional `name` and `seed`
///
/// Relative paths resolve against `base_dir`.
ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir,
                              const std::filesystem::path& default_manifest_dir, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path, const std::filesystem::path& default_manifest_dir);

// ---------------------------------------------------------------------------
// Results

struct LearnerResult {
    std::string learner;
    std::optional<double> accuracy;  // empty when the learner failed
    std::vector<int> predictions;
    std::optional<PerClassMetrics> metrics;  // the indicators behind the weights
    std::optional<WeightVector> weights;
};

struct CellResult {
    std::string dataset;
    std::uint64_t seed = 0;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    std::vector<std::string> class_names;
    std::vector<int> truth;
    std::vector<LearnerResult> learners;  // config order
    std::optional<double> ensemble_accuracy;
    std::vector<int> ensemble_predictions;
    std::optional<Committee> committee;
    std::vector<std::string> warnings;
    std::string error;  // non-empty when the cell failed

    [[nodiscard]] bool ok() const { return error.empty(); }
};

struct ColumnSummary {
    std::string column;  // learner label or "ensemble"
    std::size_t count = 0;
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation; 0 for a single seed
    bool best = false;
    bool worst = false;
};

struct DatasetSummary {
    std::string dataset;
    std::vector<ColumnSummary> columns;  // learners in config order, then the ensemble
    bool failed = false;
};

struct ExperimentReport {
    std::vector<std::string> learner_labels;
    std::string protocol;
    std::string rating;
    bool leaks_test_labels = false;
    std::vector<CellResult> cells;  // dataset-major, seed-minor
    std::vector<DatasetSummary> summaries;

    [[nodiscard]] bool all_completed() const;
};

using ProgressFn = std::function<void(const CellResult&)>;

ExperimentReport run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress = {});

/// Per-seed mean and sample stddev per column, with best/worst flags by mean.
std::vector<DatasetSummary> summarize(const std::vector<CellResult>& cells,
                                      const std::vector<std::string>& learner_labels);

// ---------------------------------------------------------------------------
// Formatting

/// csv: dataset,seed,learner,accuracy,n_test (one row per learner and the ensemble).
/// markdown: one row per dataset, mean ± stddev in percent, best cell in bold.
/// json: configuration summary, per-cell results, and summaries.
std::string format_report(const ExperimentReport& r, ReportFormat fmt);

/// dataset,seed,learner,class,precision,recall,accuracy,weight
std::string format_metrics_csv(const ExperimentReport& r);

struct AccuracyRecord {
    std::string dataset;
    std::uint64_t seed = 0;
    std::string learner;
    double accuracy = 0.0;
    std::size_t n_test = 0;

    friend bool operator==(const AccuracyRecord&, const AccuracyRecord&) = default;
};

std::vector<AccuracyRecord> accuracy_records(const ExperimentReport& r);
std::vector<AccuracyRecord> parse_report_csv(std::string_view text);

/// Writes accuracy.csv, summary.md, report.json, metrics.csv and, when
/// requested, committees/<dataset>-seed<s>.committee under `dir`.
void write_report_files(const ExperimentReport& r, const std::filesystem::path& dir, bool save_committees);

// ---------------------------------------------------------------------------
// Dataset download and verification

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

struct FetchOutcome {
    std::string dataset;
    bool ok = false;
    std::string message;
};

/// With verify_only the local file is only checked against the manifest
/// checksum; otherwise a missing file is downloaded from the manifest URL first.
FetchOutcome fetch_dataset(const DatasetManifest& manifest, bool verify_only);

}  // namespace gdm
