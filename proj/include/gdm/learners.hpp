#pragma once

#include "gdm/data.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gdm {

class LearnerError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class LearnerKind { knn, logreg, random_forest, elm, mlp_bp, linear_svm };

std::string to_string(LearnerKind kind);
LearnerKind parse_learner_kind(std::string_view s);
std::vector<LearnerKind> all_learner_kinds();

/// Kinds whose scores form a probability vector (sum to 1).
bool is_probabilistic(LearnerKind kind);

// ---------------------------------------------------------------------------
// Hyperparameters

enum class ParamType { integer, real, boolean, choice };

struct ParamSpec {
    std::string name;
    ParamType type = ParamType::real;
    std::string default_value;
    double min = 0.0;
    double max = 0.0;
    bool allow_infinite = false;  // "inf" accepted, e.g. unlimited depth
    std::vector<std::string> choices;
    std::string help;
};

const std::vector<ParamSpec>& hyperparameter_schema(LearnerKind kind);

/// Human-readable description of every kind's keys and defaults.
std::string learner_help();

/// Validated key/value set for one kind. Every schema key is always present;
/// values are stored in canonical text form.
class Hyperparameters {
public:
    explicit Hyperparameters(LearnerKind kind);

    /// Throws LearnerError for unknown keys or values outside the schema.
    Hyperparameters& set(std::string_view key, std::string_view value);

    [[nodiscard]] LearnerKind kind() const { return kind_; }
    [[nodiscard]] double real(std::string_view key) const;
    [[nodiscard]] long long integer(std::string_view key) const;
    /// Integer that may be "inf"; infinity maps to SIZE_MAX.
    [[nodiscard]] std::size_t count(std::string_view key) const;
    [[nodiscard]] bool flag(std::string_view key) const;
    [[nodiscard]] const std::string& choice(std::string_view key) const;

    [[nodiscard]] const std::map<std::string, std::string>& values() const { return values_; }

    /// "key=value" pairs joined by ';', keys sorted.
    [[nodiscard]] std::string to_string() const;
    static Hyperparameters parse(LearnerKind kind, std::string_view text);

    friend bool operator==(const Hyperparameters&, const Hyperparameters&) = default;

private:
    const std::string& raw(std::string_view key) const;

    LearnerKind kind_;
    std::map<std::string, std::string> values_;
};

struct LearnerSpec {
    LearnerKind kind = LearnerKind::knn;
    Hyperparameters hyperparameters{LearnerKind::knn};
    std::uint64_t seed = 0;
    std::string name;  // display label; defaults to the kind name

    static LearnerSpec make(LearnerKind kind, std::initializer_list<std::pair<std::string, std::string>> overrides = {},
                            std::uint64_t seed = 0);

    [[nodiscard]] std::string label() const { return name.empty() ? gdm::to_string(kind) : name; }
};

// ---------------------------------------------------------------------------
// Trained models

struct NamedArray {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<double> values;
};

using ParameterSet = std::vector<NamedArray>;

/// A decision maker: maps an instance to per-class ratings in [0, 1].
///
/// Immutable after construction; predict_scores is safe to call concurrently.
class TrainedModel {
public:
    virtual ~TrainedModel() = default;
    TrainedModel(const TrainedModel&) = delete;
    TrainedModel& operator=(const TrainedModel&) = delete;

    [[nodiscard]] const LearnerSpec& spec() const { return spec_; }
    [[nodiscard]] LearnerKind kind() const { return spec_.kind; }
    [[nodiscard]] std::size_t num_classes() const { return m_; }
    [[nodiscard]] std::size_t num_features() const { return d_; }

    /// Length m, every entry finite and in [0, 1]. Throws LearnerError on a
    /// dimension mismatch or non-finite input.
    [[nodiscard]] std::vector<double> predict_scores(std::span<const double> x) const;

    /// argmax of predict_scores, ties to the smallest class index.
    [[nodiscard]] int predict(std::span<const double> x) const;

    [[nodiscard]] std::vector<int> predict_all(const Dataset& ds) const;

    /// Learned state, enough for restore_model to rebuild an equivalent model.
    [[nodiscard]] virtual ParameterSet parameters() const = 0;

protected:
    TrainedModel(LearnerSpec spec, std::size_t num_classes, std::size_t num_features);

    virtual void compute_scores(std::span<const double> x, std::span<double> out) const = 0;

private:
    LearnerSpec spec_;
    std::size_t m_;
    std::size_t d_;
};

std::size_t argmax(std::span<const double> scores);

/// Deterministic in (spec, train). Throws LearnerError on degenerate
/// hyperparameters (k > n, zero trees, zero hidden nodes, ...).
std::shared_ptr<const TrainedModel> fit(const LearnerSpec& spec, const Dataset& train);

std::shared_ptr<const TrainedModel> restore_model(const LearnerSpec& spec, std::size_t num_classes,
                                                  std::size_t num_features, const ParameterSet& params);

}  // namespace gdm
