#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace gdm {

/// m x m counts, rows = true class, columns = predicted class.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::size_t num_classes);

    void add(int truth, int predicted);

    [[nodiscard]] std::size_t num_classes() const { return m_; }
    [[nodiscard]] std::uint64_t total() const { return n_; }
    [[nodiscard]] std::uint64_t count(std::size_t truth, std::size_t predicted) const {
        return counts_[truth * m_ + predicted];
    }
    [[nodiscard]] std::uint64_t trace() const;

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

private:
    std::size_t m_;
    std::uint64_t n_ = 0;
    std::vector<std::uint64_t> counts_;
};

ConfusionMatrix confusion_matrix(std::span<const int> y_true, std::span<const int> y_pred, std::size_t num_classes);

/// Binary counts for class c against all other classes.
struct OvrCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;
};

OvrCounts ovr_collapse(const ConfusionMatrix& cm, std::size_t c);

// Zero denominators give 0.
double precision(const ConfusionMatrix& cm, std::size_t c);
double recall(const ConfusionMatrix& cm, std::size_t c);

/// trace / n.
double accuracy(const ConfusionMatrix& cm);

/// (TP + TN) / n for class c.
double ovr_accuracy(const ConfusionMatrix& cm, std::size_t c);

enum class AccuracyMode {
    overall,      // overall accuracy replicated for every class
    one_vs_rest,  // per-class (TP + TN) / n
};

AccuracyMode parse_accuracy_mode(std::string_view s);
std::string to_string(AccuracyMode mode);

/// P_k, R_k and A_k of one learner.
struct PerClassMetrics {
    std::vector<double> precision;
    std::vector<double> recall;
    std::vector<double> accuracy;

    [[nodiscard]] std::size_t num_classes() const { return precision.size(); }
};

PerClassMetrics per_class_metrics(const ConfusionMatrix& cm, AccuracyMode mode = AccuracyMode::overall);

/// Per-class credibility of one decision maker; each entry in [0, 3].
struct WeightVector {
    std::vector<double> w;

    [[nodiscard]] std::size_t size() const { return w.size(); }
    double operator[](std::size_t i) const { return w[i]; }
    friend bool operator==(const WeightVector&, const WeightVector&) = default;
};

/// w[i] = precision[i] + recall[i] + accuracy[i].
WeightVector learner_weights(const PerClassMetrics& pm);

/// One row of a metrics table.
struct MetricsRecord {
    std::string learner;
    std::string class_name;
    double precision = 0.0;
    double recall = 0.0;
    double accuracy = 0.0;
    double weight = 0.0;
};

/// Flat rows in the order learner-major, class-minor.
std::vector<MetricsRecord> metrics_records(const std::string& learner, const std::vector<std::string>& class_names,
                                           const PerClassMetrics& pm, const WeightVector& w);

/// Header: learner,class,precision,recall,accuracy,weight
void write_metrics_csv(std::ostream& out, std::span<const MetricsRecord> rows);

}  // namespace gdm
