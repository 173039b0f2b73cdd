#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace gdm::testkit {

struct Fraction {
    std::uint64_t num;
    std::uint64_t den;  // 0/0 is written {0, 1}: the metric is defined as 0
    [[nodiscard]] double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

/// A small labelling worked out by hand.
struct MetricsFixture {
    std::string name;
    std::size_t m;
    std::vector<int> truth;
    std::vector<int> predicted;
    std::vector<std::vector<std::uint64_t>> counts;
    std::vector<Fraction> precision;
    std::vector<Fraction> recall;
    Fraction accuracy;
};

inline std::vector<MetricsFixture> metrics_fixtures() {
    return {
        {"three_class_example", 3, {0, 0, 1, 1, 2}, {0, 1, 1, 1, 2},
         {{1, 1, 0}, {0, 2, 0}, {0, 0, 1}},
         {{1, 1}, {2, 3}, {1, 1}}, {{1, 2}, {2, 2}, {1, 1}}, {4, 5}},
        {"binary_perfect", 2, {0, 1, 0, 1}, {0, 1, 0, 1},
         {{2, 0}, {0, 2}},
         {{2, 2}, {2, 2}}, {{2, 2}, {2, 2}}, {4, 4}},
        {"binary_all_wrong", 2, {0, 0, 1, 1}, {1, 1, 0, 0},
         {{0, 2}, {2, 0}},
         {{0, 2}, {0, 2}}, {{0, 2}, {0, 2}}, {0, 4}},
        {"constant_predictor", 3, {0, 1, 2, 2}, {2, 2, 2, 2},
         {{0, 0, 1}, {0, 0, 1}, {0, 0, 2}},
         {{0, 1}, {0, 1}, {2, 4}}, {{0, 1}, {0, 1}, {2, 2}}, {2, 4}},
        {"binary_symmetric", 2, {1, 1, 1, 0, 0, 0, 0, 1}, {1, 0, 1, 0, 1, 0, 0, 1},
         {{3, 1}, {1, 3}},
         {{3, 4}, {3, 4}}, {{3, 4}, {3, 4}}, {6, 8}},
        {"four_class_mixed", 4, {0, 1, 2, 3, 3, 2}, {0, 1, 1, 3, 0, 2},
         {{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 1, 1, 0}, {1, 0, 0, 1}},
         {{1, 2}, {1, 2}, {1, 1}, {1, 1}}, {{1, 1}, {1, 1}, {1, 2}, {1, 2}}, {4, 6}},
        {"class_absent_from_truth", 3, {0, 0, 1, 1}, {0, 2, 1, 2},
         {{1, 0, 1}, {0, 1, 1}, {0, 0, 0}},
         {{1, 1}, {1, 1}, {0, 2}}, {{1, 2}, {1, 2}, {0, 1}}, {2, 4}},
        {"single_instance_wrong", 2, {1}, {0},
         {{0, 0}, {1, 0}},
         {{0, 1}, {0, 1}}, {{0, 1}, {0, 1}}, {0, 1}},
        {"imbalanced_majority_guess", 2, {0, 0, 0, 0, 0, 0, 0, 0, 0, 1}, {0, 0, 0, 0, 0, 0, 0, 0, 0, 0},
         {{9, 0}, {1, 0}},
         {{9, 10}, {0, 1}}, {{9, 9}, {0, 1}}, {9, 10}},
        {"three_class_cycle", 3, {0, 1, 2, 0, 1, 2}, {1, 2, 0, 0, 1, 2},
         {{1, 1, 0}, {0, 1, 1}, {1, 0, 1}},
         {{1, 2}, {1, 2}, {1, 2}}, {{1, 2}, {1, 2}, {1, 2}}, {3, 6}},
    };
}

/// Reported indicators for one learner on CMC (three classes) and the
/// credibility sums worked out from them by hand, to four decimals.
struct IndicatorRow {
    std::string learner;
    std::array<double, 3> precision;
    std::array<double, 3> recall;
    std::array<double, 3> accuracy;
    std::array<double, 3> weight;
};

inline std::vector<IndicatorRow> reported_indicator_rows() {
    return {
        {"SVM", {0.8440, 0.5000, 0.7119}, {0.9200, 0.6800, 0.8400}, {0.5119, 0.5119, 0.5119}, {2.2759, 1.6919, 2.0638}},
        {"BP", {0.8919, 0.6571, 0.8154}, {0.9083, 0.6970, 0.8413}, {0.5930, 0.9083, 0.5930}, {2.3932, 2.2624, 2.2497}},
        {"LR", {0.8333, 0.4444, 0.6552}, {0.9345, 0.6956, 0.8444}, {0.5220, 0.5220, 0.5220}, {2.2898, 1.6620, 2.0216}},
        {"KNN", {0.7573, 0.4681, 0.6094}, {0.8864, 0.6875, 0.7959}, {0.4712, 0.4712, 0.4712}, {2.1149, 1.6268, 1.8765}},
        {"RF", {0.8613, 0.5250, 0.7324}, {0.9593, 0.8077, 0.9123}, {0.6475, 0.6475, 0.6475}, {2.4681, 1.9802, 2.2922}},
        {"ELM", {0.8019, 0.5714, 0.3636}, {0.6439, 0.3733, 0.2034}, {0.4237, 0.4237, 0.4237}, {1.8695, 1.3684, 0.9907}},
    };
}

}  // namespace gdm::testkit
