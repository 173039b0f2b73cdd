#include "gdm/metrics.hpp"

#include "gdm/text.hpp"

#include <ostream>
#include <stdexcept>

namespace gdm {

namespace {

double ratio(std::uint64_t num, std::uint64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

void check_class(const ConfusionMatrix& cm, std::size_t c) {
    if (c >= cm.num_classes()) throw std::out_of_range("class index " + std::to_string(c) + " out of range");
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(std::size_t num_classes) : m_(num_classes), counts_(num_classes * num_classes, 0) {
    if (num_classes == 0) throw std::invalid_argument("confusion matrix needs at least one class");
}

void ConfusionMatrix::add(int truth, int predicted) {
    if (truth < 0 || predicted < 0 || static_cast<std::size_t>(truth) >= m_ ||
        static_cast<std::size_t>(predicted) >= m_) {
        throw std::out_of_range("label out of range for confusion matrix");
    }
    ++counts_[static_cast<std::size_t>(truth) * m_ + static_cast<std::size_t>(predicted)];
    ++n_;
}

std::uint64_t ConfusionMatrix::trace() const {
    std::uint64_t t = 0;
    for (std::size_t i = 0; i < m_; ++i) t += count(i, i);
    return t;
}

ConfusionMatrix confusion_matrix(std::span<const int> y_true, std::span<const int> y_pred, std::size_t num_classes) {
    if (y_true.size() != y_pred.size()) {
        throw std::invalid_argument("label vectors differ in length (" + std::to_string(y_true.size()) + " vs " +
                                    std::to_string(y_pred.size()) + ")");
    }
    if (y_true.empty()) throw std::invalid_argument("label vectors are empty");
    ConfusionMatrix cm(num_classes);
    for (std::size_t t = 0; t < y_true.size(); ++t) cm.add(y_true[t], y_pred[t]);
    return cm;
}

OvrCounts ovr_collapse(const ConfusionMatrix& cm, std::size_t c) {
    check_class(cm, c);
    OvrCounts k;
    k.tp = cm.count(c, c);
    for (std::size_t i = 0; i < cm.num_classes(); ++i) {
        if (i == c) continue;
        k.fp += cm.count(i, c);
        k.fn += cm.count(c, i);
    }
    k.tn = cm.total() - k.tp - k.fp - k.fn;
    return k;
}

double precision(const ConfusionMatrix& cm, std::size_t c) {
    const auto k = ovr_collapse(cm, c);
    return ratio(k.tp, k.tp + k.fp);
}

double recall(const ConfusionMatrix& cm, std::size_t c) {
    const auto k = ovr_collapse(cm, c);
    return ratio(k.tp, k.tp + k.fn);
}

double accuracy(const ConfusionMatrix& cm) { return ratio(cm.trace(), cm.total()); }

double ovr_accuracy(const ConfusionMatrix& cm, std::size_t c) {
    const auto k = ovr_collapse(cm, c);
    return ratio(k.tp + k.tn, k.tp + k.fp + k.tn + k.fn);
}

AccuracyMode parse_accuracy_mode(std::string_view s) {
    const auto v = text::to_lower(text::trim(s));
    if (v == "overall") return AccuracyMode::overall;
    if (v == "ovr" || v == "one-vs-rest" || v == "one_vs_rest") return AccuracyMode::one_vs_rest;
    throw std::invalid_argument("unknown accuracy mode '" + std::string(s) + "' (overall|ovr)");
}

std::string to_string(AccuracyMode mode) { return mode == AccuracyMode::overall ? "overall" : "ovr"; }

PerClassMetrics per_class_metrics(const ConfusionMatrix& cm, AccuracyMode mode) {
    const auto m = cm.num_classes();
    PerClassMetrics pm;
    pm.precision.resize(m);
    pm.recall.resize(m);
    pm.accuracy.resize(m);
    const double overall = accuracy(cm);
    for (std::size_t c = 0; c < m; ++c) {
        pm.precision[c] = precision(cm, c);
        pm.recall[c] = recall(cm, c);
        pm.accuracy[c] = mode == AccuracyMode::overall ? overall : ovr_accuracy(cm, c);
    }
    return pm;
}

WeightVector learner_weights(const PerClassMetrics& pm) {
    const auto m = pm.precision.size();
    if (pm.recall.size() != m || pm.accuracy.size() != m) {
        throw std::invalid_argument("precision, recall and accuracy vectors differ in length");
    }
    WeightVector w;
    w.w.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        for (double v : {pm.precision[i], pm.recall[i], pm.accuracy[i]}) {
            if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("metric outside [0, 1]");
        }
        w.w[i] = pm.precision[i] + pm.recall[i] + pm.accuracy[i];
    }
    return w;
}

std::vector<MetricsRecord> metrics_records(const std::string& learner, const std::vector<std::string>& class_names,
                                           const PerClassMetrics& pm, const WeightVector& w) {
    if (class_names.size() != pm.num_classes() || w.size() != pm.num_classes()) {
        throw std::invalid_argument("metrics_records: class count mismatch");
    }
    std::vector<MetricsRecord> rows;
    for (std::size_t c = 0; c < class_names.size(); ++c) {
        rows.push_back({learner, class_names[c], pm.precision[c], pm.recall[c], pm.accuracy[c], w[c]});
    }
    return rows;
}

void write_metrics_csv(std::ostream& out, std::span<const MetricsRecord> rows) {
    out << "learner,class,precision,recall,accuracy,weight\n";
    for (const auto& r : rows) {
        out << r.learner << ',' << r.class_name << ',' << text::format_double(r.precision) << ','
            << text::format_double(r.recall) << ',' << text::format_double(r.accuracy) << ','
            << text::format_double(r.weight) << '\n';
    }
}

}  // namespace gdm
