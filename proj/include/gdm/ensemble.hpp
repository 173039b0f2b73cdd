#pragma once

// Group-decision combiner: each trained learner is a decision maker that rates
// every class, and its ratings are scaled by per-class credibility weights
// W_k = P_k + R_k + A_k before the highest-scoring class is chosen.

#include "gdm/data.hpp"
#include "gdm/learners.hpp"
#include "gdm/metrics.hpp"

#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gdm {

class EnsembleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class RatingMode {
    onehot,  // 1 at the predicted class
    scores,  // predict_scores verbatim
};

RatingMode parse_rating_mode(std::string_view s);
std::string to_string(RatingMode mode);

/// One learner's ratings of the m classes for one instance, each in [0, 1].
using RatingRow = std::vector<double>;

RatingRow rate(const TrainedModel& model, std::span<const double> instance, RatingMode mode);

/// score[j] = sum_k ratings[k][j] * weights[k][j].
std::vector<double> aggregate_scores(std::span<const RatingRow> ratings, std::span<const WeightVector> weights);

/// Smallest index of the maximum aggregate score.
std::size_t aggregate(std::span<const RatingRow> ratings, std::span<const WeightVector> weights);

struct CommitteeMember {
    std::shared_ptr<const TrainedModel> model;
    WeightVector weights;
    std::optional<PerClassMetrics> metrics;  // the indicators the weights came from
};

class Committee {
public:
    Committee(std::vector<CommitteeMember> members, std::size_t num_classes, RatingMode mode,
              std::vector<std::string> class_names = {});

    [[nodiscard]] std::size_t size() const { return members_.size(); }
    [[nodiscard]] std::size_t num_classes() const { return m_; }
    [[nodiscard]] std::size_t num_features() const { return members_.front().model->num_features(); }
    [[nodiscard]] RatingMode rating_mode() const { return mode_; }
    [[nodiscard]] const std::vector<CommitteeMember>& members() const { return members_; }
    [[nodiscard]] const std::vector<std::string>& class_names() const { return class_names_; }

    [[nodiscard]] std::vector<double> scores(std::span<const double> instance) const;
    [[nodiscard]] int predict(std::span<const double> instance) const;
    /// Row order preserved; rows may be evaluated on `jobs` threads.
    [[nodiscard]] std::vector<int> predict_all(const Dataset& ds, std::size_t jobs = 1) const;

private:
    std::vector<CommitteeMember> members_;
    std::size_t m_;
    RatingMode mode_;
    std::vector<std::string> class_names_;
};

int predict_committee(const Committee& c, std::span<const double> instance);

// ---------------------------------------------------------------------------
// Fitting

/// Where the indicators behind the weights are measured.
struct WeightProtocol {
    enum class Kind {
        validation,      // stratified hold-out of the training set; members refit on all of it afterwards
        resubstitution,  // the training set itself
        external,        // a caller-supplied set; with the test set this leaks test labels
    };
    Kind kind = Kind::validation;
    double fraction = 0.25;
    std::shared_ptr<const Dataset> evaluation;

    static WeightProtocol validation(double fraction = 0.25) { return {Kind::validation, fraction, nullptr}; }
    static WeightProtocol resubstitution() { return {Kind::resubstitution, 0.0, nullptr}; }
    static WeightProtocol external(std::shared_ptr<const Dataset> ds) { return {Kind::external, 0.0, std::move(ds)}; }

    [[nodiscard]] std::string describe() const;
};

struct FitOptions {
    RatingMode rating_mode = RatingMode::scores;
    AccuracyMode accuracy_mode = AccuracyMode::overall;
    SplitRounding rounding = SplitRounding::half_up;
    bool drop_failed = false;  // skip members whose training throws instead of failing the fit
    std::size_t jobs = 1;
};

struct MemberFailure {
    std::string learner;
    std::string message;
};

struct FitResult {
    Committee committee;
    std::vector<MemberFailure> failures;
};

/// Trains one member per spec and weights it by its indicators under the
/// protocol. `seed` drives only the validation split; member randomness comes
/// from each spec's own seed.
FitResult fit_committee(const Dataset& train, std::span<const LearnerSpec> specs, const WeightProtocol& protocol,
                        std::uint64_t seed, const FitOptions& options = {});

// ---------------------------------------------------------------------------
// Persistence

void save_committee(const Committee& c, std::ostream& out);
void save_committee(const Committee& c, const std::filesystem::path& path);
Committee load_committee(std::istream& in, const std::string& source = "<stream>");
Committee load_committee(const std::filesystem::path& path);

}  // namespace gdm
