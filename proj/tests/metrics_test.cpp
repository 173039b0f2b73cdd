#include "gdm/metrics.hpp"
#include "gdm/random.hpp"
#include "gdm/text.hpp"

#include "fixtures.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace gdm;
using gdm::testkit::metrics_fixtures;

TEST(Confusion, WorkedExampleCounts) {
    const std::vector<int> t{0, 0, 1, 1, 2}, p{0, 1, 1, 1, 2};
    const auto cm = confusion_matrix(t, p, 3);
    const std::uint64_t want[3][3] = {{1, 1, 0}, {0, 2, 0}, {0, 0, 1}};
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(cm.count(i, j), want[i][j]) << i << ',' << j;
    EXPECT_EQ(cm.total(), 5u);
    EXPECT_EQ(cm.trace(), 4u);

    const auto k = ovr_collapse(cm, 1);
    EXPECT_EQ(k.tp, 2u);
    EXPECT_EQ(k.fp, 1u);
    EXPECT_EQ(k.fn, 0u);
    EXPECT_EQ(k.tn, 2u);
    EXPECT_DOUBLE_EQ(precision(cm, 1), 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(recall(cm, 1), 1.0);
    EXPECT_DOUBLE_EQ(accuracy(cm), 0.8);
    EXPECT_DOUBLE_EQ(ovr_accuracy(cm, 1), 0.8);
}

TEST(Confusion, HandFixtures) {
    for (const auto& f : metrics_fixtures()) {
        SCOPED_TRACE(f.name);
        const auto cm = confusion_matrix(f.truth, f.predicted, f.m);
        for (std::size_t i = 0; i < f.m; ++i)
            for (std::size_t j = 0; j < f.m; ++j) EXPECT_EQ(cm.count(i, j), f.counts[i][j]);
        for (std::size_t c = 0; c < f.m; ++c) {
            EXPECT_EQ(precision(cm, c), f.precision[c].value()) << "class " << c;
            EXPECT_EQ(recall(cm, c), f.recall[c].value()) << "class " << c;
        }
        EXPECT_EQ(accuracy(cm), f.accuracy.value());
    }
}

TEST(Confusion, RejectsBadInput) {
    const std::vector<int> a{0, 1}, b{0};
    EXPECT_THROW(confusion_matrix(a, b, 2), std::invalid_argument);
    EXPECT_THROW(confusion_matrix(std::vector<int>{}, std::vector<int>{}, 2), std::invalid_argument);
    EXPECT_THROW(confusion_matrix(std::vector<int>{0, 2}, std::vector<int>{0, 1}, 2), std::out_of_range);
    EXPECT_THROW(confusion_matrix(std::vector<int>{0, -1}, std::vector<int>{0, 1}, 2), std::out_of_range);
    EXPECT_THROW(ConfusionMatrix(0), std::invalid_argument);
    const auto cm = confusion_matrix(a, a, 2);
    EXPECT_THROW(ovr_collapse(cm, 2), std::out_of_range);
}

TEST(Confusion, CollapseCountsSumToTotal) {
    SeedStream rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t m = 2 + rng.below(5);
        const std::size_t n = 1 + rng.below(40);
        std::vector<int> t(n), p(n);
        for (std::size_t i = 0; i < n; ++i) {
            t[i] = static_cast<int>(rng.below(m));
            p[i] = static_cast<int>(rng.below(m));
        }
        const auto cm = confusion_matrix(t, p, m);
        std::uint64_t row_sum = 0;
        for (std::size_t c = 0; c < m; ++c) {
            const auto k = ovr_collapse(cm, c);
            EXPECT_EQ(k.tp + k.fp + k.fn + k.tn, n);
            row_sum += k.tp + k.fn;
        }
        EXPECT_EQ(row_sum, n);
    }
}

TEST(Metrics, ZeroDenominatorsAreZero) {
    // Class 2 never occurs in truth and is never predicted.
    const auto cm = confusion_matrix(std::vector<int>{0, 1}, std::vector<int>{1, 1}, 3);
    EXPECT_EQ(precision(cm, 0), 0.0);
    EXPECT_EQ(precision(cm, 2), 0.0);
    EXPECT_EQ(recall(cm, 2), 0.0);
    EXPECT_DOUBLE_EQ(precision(cm, 1), 0.5);
}

TEST(Metrics, ConstantPredictorHasFullRecall) {
    SeedStream rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t m = 2 + rng.below(5);
        const std::size_t n = m + rng.below(50);
        const auto t = gdm::testkit::random_labels(rng, n, m);
        const int c = static_cast<int>(rng.below(m));
        const std::vector<int> p(n, c);
        const auto cm = confusion_matrix(t, p, m);
        EXPECT_EQ(recall(cm, static_cast<std::size_t>(c)), 1.0);
        for (std::size_t o = 0; o < m; ++o) {
            if (o != static_cast<std::size_t>(c)) EXPECT_EQ(recall(cm, o), 0.0);
        }
    }
}

TEST(Metrics, BinaryMatchesTextbookFormulas) {
    SeedStream rng(21);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng.below(30);
        std::vector<int> t(n), p(n);
        for (std::size_t i = 0; i < n; ++i) {
            t[i] = static_cast<int>(rng.below(2));
            p[i] = static_cast<int>(rng.below(2));
        }
        int tp = 0, fp = 0, fn = 0, tn = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (t[i] == 1 && p[i] == 1) ++tp;
            else if (t[i] == 0 && p[i] == 1) ++fp;
            else if (t[i] == 1 && p[i] == 0) ++fn;
            else ++tn;
        }
        const auto cm = confusion_matrix(t, p, 2);
        EXPECT_EQ(precision(cm, 1), tp + fp == 0 ? 0.0 : double(tp) / (tp + fp));
        EXPECT_EQ(recall(cm, 1), tp + fn == 0 ? 0.0 : double(tp) / (tp + fn));
        EXPECT_EQ(accuracy(cm), double(tp + tn) / n);
        EXPECT_EQ(ovr_accuracy(cm, 1), accuracy(cm));
        EXPECT_EQ(ovr_accuracy(cm, 0), accuracy(cm));
    }
}

TEST(Metrics, FixingAWrongPredictionNeverLowersTheTrueClassRecall) {
    SeedStream rng(8);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t m = 2 + rng.below(4);
        const std::size_t n = m + rng.below(30);
        const auto t = gdm::testkit::random_labels(rng, n, m);
        std::vector<int> p(n);
        for (auto& v : p) v = static_cast<int>(rng.below(m));
        const auto before = confusion_matrix(t, p, m);
        std::size_t i = rng.below(n);
        p[i] = t[i];
        const auto after = confusion_matrix(t, p, m);
        const auto c = static_cast<std::size_t>(t[i]);
        EXPECT_GE(recall(after, c), recall(before, c));
        EXPECT_GE(accuracy(after), accuracy(before));
    }
}

TEST(Metrics, OvrAccuracyWorkedExample) {
    const auto cm = confusion_matrix(std::vector<int>{0, 0, 1, 1, 2}, std::vector<int>{0, 1, 1, 1, 2}, 3);
    const auto pm = per_class_metrics(cm, AccuracyMode::one_vs_rest);
    // Class 0: TP 1, TN 3. Class 1: TP 2, TN 2. Class 2: TP 1, TN 4.
    EXPECT_DOUBLE_EQ(pm.accuracy[0], 0.8);
    EXPECT_DOUBLE_EQ(pm.accuracy[1], 0.8);
    EXPECT_DOUBLE_EQ(pm.accuracy[2], 1.0);
    const auto overall = per_class_metrics(cm);
    for (double a : overall.accuracy) EXPECT_DOUBLE_EQ(a, 0.8);
}

TEST(AccuracyModeText, ParseAndPrint) {
    EXPECT_EQ(parse_accuracy_mode("overall"), AccuracyMode::overall);
    EXPECT_EQ(parse_accuracy_mode(" OVR "), AccuracyMode::one_vs_rest);
    EXPECT_EQ(parse_accuracy_mode("one-vs-rest"), AccuracyMode::one_vs_rest);
    EXPECT_THROW(parse_accuracy_mode("macro"), std::invalid_argument);
    EXPECT_EQ(to_string(AccuracyMode::one_vs_rest), "ovr");
}

TEST(Weights, ReportedIndicatorRows) {
    for (const auto& row : gdm::testkit::reported_indicator_rows()) {
        SCOPED_TRACE(row.learner);
        PerClassMetrics pm{{row.precision.begin(), row.precision.end()},
                           {row.recall.begin(), row.recall.end()},
                           {row.accuracy.begin(), row.accuracy.end()}};
        const auto w = learner_weights(pm);
        ASSERT_EQ(w.size(), 3u);
        for (std::size_t c = 0; c < 3; ++c) {
            EXPECT_NEAR(w[c], row.weight[c], 1e-12);
            EXPECT_EQ(text::format_fixed(w[c], 4), text::format_fixed(row.weight[c], 4));
        }
    }
}

TEST(Weights, ExtremesAndBounds) {
    const auto perfect = per_class_metrics(confusion_matrix(std::vector<int>{0, 1, 2}, std::vector<int>{0, 1, 2}, 3));
    for (double w : learner_weights(perfect).w) EXPECT_EQ(w, 3.0);
    const auto hopeless = per_class_metrics(confusion_matrix(std::vector<int>{0, 1}, std::vector<int>{1, 0}, 2));
    for (double w : learner_weights(hopeless).w) EXPECT_EQ(w, 0.0);

    SeedStream rng(3);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t m = 2 + rng.below(5);
        const std::size_t n = 1 + rng.below(40);
        std::vector<int> t(n), p(n);
        for (std::size_t i = 0; i < n; ++i) {
            t[i] = static_cast<int>(rng.below(m));
            p[i] = static_cast<int>(rng.below(m));
        }
        const auto mode = trial % 2 ? AccuracyMode::overall : AccuracyMode::one_vs_rest;
        const auto pm = per_class_metrics(confusion_matrix(t, p, m), mode);
        const auto w = learner_weights(pm);
        for (std::size_t c = 0; c < m; ++c) {
            EXPECT_GE(w[c], 0.0);
            EXPECT_LE(w[c], 3.0);
            EXPECT_EQ(w[c], pm.precision[c] + pm.recall[c] + pm.accuracy[c]);
        }
    }
}

TEST(Weights, RejectsMalformedIndicators) {
    EXPECT_THROW(learner_weights(PerClassMetrics{{0.5}, {0.5, 0.5}, {0.5}}), std::invalid_argument);
    EXPECT_THROW(learner_weights(PerClassMetrics{{1.5}, {0.5}, {0.5}}), std::invalid_argument);
    EXPECT_THROW(learner_weights(PerClassMetrics{{std::nan("")}, {0.5}, {0.5}}), std::invalid_argument);
}

TEST(MetricsCsv, RowsAndHeader) {
    const PerClassMetrics pm{{1.0, 2.0 / 3.0}, {0.5, 1.0}, {0.5, 0.5}};
    const auto w = learner_weights(pm);
    const auto rows = metrics_records("knn", {"a", "b"}, pm, w);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[1].class_name, "b");
    EXPECT_DOUBLE_EQ(rows[1].weight, 2.0 / 3.0 + 1.5);
    std::ostringstream out;
    write_metrics_csv(out, rows);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "learner,class,precision,recall,accuracy,weight");
    std::getline(in, line);
    EXPECT_EQ(line, "knn,a,1,0.5,0.5,2");
    std::getline(in, line);
    const auto fields = text::split(line, ',');
    ASSERT_EQ(fields.size(), 6u);
    EXPECT_EQ(text::parse_double(fields[2]), 2.0 / 3.0);
    EXPECT_THROW(metrics_records("knn", {"a"}, pm, w), std::invalid_argument);
}
