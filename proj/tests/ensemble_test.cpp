#include "gdm/ensemble.hpp"
#include "gdm/learner_models.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>

using namespace gdm;
using gdm::testkit::make_blobs;

namespace {

/// Rates every instance with a caller-chosen function.
class ScriptedModel final : public TrainedModel {
public:
    using Fn = std::function<void(std::span<const double>, std::span<double>)>;
    ScriptedModel(std::size_t m, std::size_t d, Fn fn)
        : TrainedModel(LearnerSpec::make(LearnerKind::knn), m, d), fn_(std::move(fn)) {}
    [[nodiscard]] ParameterSet parameters() const override { return {}; }

protected:
    void compute_scores(std::span<const double> x, std::span<double> out) const override { fn_(x, out); }

private:
    Fn fn_;
};

std::size_t brute_force(const std::vector<RatingRow>& ratings, const std::vector<WeightVector>& weights) {
    const std::size_t m = ratings.front().size();
    std::size_t best = 0;
    double best_score = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < ratings.size(); ++k) s += ratings[k][j] * weights[k].w[j];
        if (j == 0 || s > best_score) {
            best = j;
            best_score = s;
        }
    }
    return best;
}

struct RandomCommittee {
    std::vector<RatingRow> ratings;
    std::vector<WeightVector> weights;
};

RandomCommittee random_committee(SeedStream& rng, bool coarse) {
    const std::size_t k = 1 + rng.below(5);
    const std::size_t m = 2 + rng.below(5);
    RandomCommittee c;
    for (std::size_t i = 0; i < k; ++i) {
        RatingRow r(m);
        WeightVector w;
        w.w.resize(m);
        if (coarse) {
            r[rng.below(m)] = 1.0;  // one-hot ratings and few weight levels produce ties
            for (auto& v : w.w) v = static_cast<double>(rng.below(4));
        } else {
            for (auto& v : r) v = rng.uniform01();
            for (auto& v : w.w) v = 3.0 * rng.uniform01();
        }
        c.ratings.push_back(std::move(r));
        c.weights.push_back(std::move(w));
    }
    return c;
}

std::vector<double> row_of(const Dataset& ds, std::size_t i) { return {ds.row(i).begin(), ds.row(i).end()}; }

std::vector<LearnerSpec> small_roster(std::uint64_t seed = 7) {
    return {LearnerSpec::make(LearnerKind::knn, {{"k", "3"}}, seed),
            LearnerSpec::make(LearnerKind::logreg, {{"max_iter", "200"}}, seed),
            LearnerSpec::make(LearnerKind::random_forest, {{"trees", "10"}}, seed),
            LearnerSpec::make(LearnerKind::elm, {{"hidden", "20"}}, seed)};
}

}  // namespace

// ---------------------------------------------------------------------------
// Aggregation

TEST(Aggregate, WorkedExample) {
    const std::vector<RatingRow> ratings{{0.6, 0.3, 0.1}, {0.1, 0.2, 0.7}};
    const std::vector<WeightVector> weights{{{1, 1, 1}}, {{2, 2, 2}}};
    const auto s = aggregate_scores(ratings, weights);
    EXPECT_DOUBLE_EQ(s[0], 0.8);
    EXPECT_DOUBLE_EQ(s[1], 0.7);
    EXPECT_DOUBLE_EQ(s[2], 1.5);
    EXPECT_EQ(aggregate(ratings, weights), 2u);
}

TEST(Aggregate, TiesGoToTheSmallestClass) {
    const std::vector<RatingRow> ratings{{0, 1, 0}, {0, 0, 1}};
    const std::vector<WeightVector> weights{{{1, 2, 1}}, {{1, 1, 2}}};
    EXPECT_EQ(aggregate(ratings, weights), 1u);
    const std::vector<WeightVector> zero{{{0, 0, 0}}, {{0, 0, 0}}};
    EXPECT_EQ(aggregate(ratings, zero), 0u);
}

TEST(Aggregate, MatchesBruteForce) {
    SeedStream rng(100);
    for (int t = 0; t < 1000; ++t) {
        const auto c = random_committee(rng, t % 2 == 1);
        EXPECT_EQ(aggregate(c.ratings, c.weights), brute_force(c.ratings, c.weights)) << "case " << t;
    }
}

TEST(Aggregate, RejectsMalformedInput) {
    const std::vector<RatingRow> two{{0.5, 0.5}, {0.5, 0.5}};
    const std::vector<WeightVector> one{{{1, 1}}};
    EXPECT_THROW(aggregate(two, one), EnsembleError);
    EXPECT_THROW(aggregate(std::vector<RatingRow>{}, std::vector<WeightVector>{}), EnsembleError);
    const std::vector<RatingRow> ragged{{0.5, 0.5}, {0.5}};
    const std::vector<WeightVector> w2{{{1, 1}}, {{1, 1}}};
    EXPECT_THROW(aggregate(ragged, w2), EnsembleError);
    const std::vector<RatingRow> bad{{std::nan(""), 0.5}, {0.5, 0.5}};
    EXPECT_THROW(aggregate(bad, w2), EnsembleError);
}

TEST(AggregateProperties, CommonPositiveScaling) {
    SeedStream rng(1);
    for (int t = 0; t < 1000; ++t) {
        auto c = random_committee(rng, t % 2 == 1);
        const auto before = aggregate(c.ratings, c.weights);
        // Powers of two keep every product exact, so ties survive too.
        const double alpha = std::ldexp(1.0, static_cast<int>(rng.below(9)) - 4);
        for (auto& w : c.weights)
            for (auto& v : w.w) v *= alpha;
        EXPECT_EQ(aggregate(c.ratings, c.weights), before);
    }
}

TEST(AggregateProperties, MemberPermutation) {
    SeedStream rng(2);
    for (int t = 0; t < 1000; ++t) {
        auto c = random_committee(rng, t % 2 == 1);
        const auto before = aggregate(c.ratings, c.weights);
        std::vector<std::size_t> order(c.ratings.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng.shuffle(std::span<std::size_t>(order));
        RandomCommittee p;
        for (auto i : order) {
            p.ratings.push_back(c.ratings[i]);
            p.weights.push_back(c.weights[i]);
        }
        // Reordering a floating-point sum can flip a near tie; compare against exact ties only.
        const auto s = aggregate_scores(p.ratings, p.weights);
        const auto after = aggregate(p.ratings, p.weights);
        if (after != before) EXPECT_NEAR(s[after], s[before], 1e-12) << "case " << t;
        if (t % 2 == 1) EXPECT_EQ(after, before);
    }
}

TEST(AggregateProperties, UnanimousVoteWins) {
    SeedStream rng(3);
    for (int t = 0; t < 1000; ++t) {
        auto c = random_committee(rng, false);
        const std::size_t m = c.ratings.front().size();
        const std::size_t winner = rng.below(m);
        for (auto& r : c.ratings) {
            std::fill(r.begin(), r.end(), 0.0);
            r[winner] = 1.0;
        }
        for (auto& w : c.weights) w.w[winner] = std::max(w.w[winner], 0.01);
        EXPECT_EQ(aggregate(c.ratings, c.weights), winner);
    }
}

TEST(AggregateProperties, DominantRatingWins) {
    SeedStream rng(4);
    for (int t = 0; t < 500; ++t) {
        auto c = random_committee(rng, false);
        const std::size_t m = c.ratings.front().size();
        const std::size_t winner = rng.below(m);
        for (std::size_t k = 0; k < c.ratings.size(); ++k) {
            for (std::size_t j = 0; j < m; ++j) {
                if (j != winner) c.ratings[k][j] = std::min(c.ratings[k][j], 0.4);
            }
            c.ratings[k][winner] = 0.5;
            std::fill(c.weights[k].w.begin(), c.weights[k].w.end(), 1.0 + c.weights[k].w[0]);
        }
        EXPECT_EQ(aggregate(c.ratings, c.weights), winner);
    }
}

TEST(AggregateProperties, ZeroWeightMemberIsInert) {
    SeedStream rng(5);
    for (int t = 0; t < 1000; ++t) {
        auto c = random_committee(rng, t % 2 == 1);
        const auto before = aggregate(c.ratings, c.weights);
        RatingRow extra(c.ratings.front().size());
        for (auto& v : extra) v = rng.uniform01();
        const auto at = static_cast<std::ptrdiff_t>(rng.below(c.ratings.size() + 1));
        c.ratings.insert(c.ratings.begin() + at, extra);
        c.weights.insert(c.weights.begin() + at, WeightVector{std::vector<double>(extra.size(), 0.0)});
        EXPECT_EQ(aggregate(c.ratings, c.weights), before);
    }
}

// ---------------------------------------------------------------------------
// Ratings and committees

TEST(Rating, ModesParseAndPrint) {
    EXPECT_EQ(parse_rating_mode("onehot"), RatingMode::onehot);
    EXPECT_EQ(parse_rating_mode("One-Hot"), RatingMode::onehot);
    EXPECT_EQ(parse_rating_mode("scores"), RatingMode::scores);
    EXPECT_THROW(parse_rating_mode("rank"), EnsembleError);
    EXPECT_EQ(to_string(RatingMode::onehot), "onehot");
}

TEST(Rating, OneHotMarksThePrediction) {
    const auto ds = make_blobs(10, 3, 2, 1);
    const auto model = fit(LearnerSpec::make(LearnerKind::knn, {{"k", "4"}}), ds);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto r = rate(*model, ds.row(i), RatingMode::onehot);
        const auto p = static_cast<std::size_t>(model->predict(ds.row(i)));
        for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(r[j], j == p ? 1.0 : 0.0);
        EXPECT_EQ(rate(*model, ds.row(i), RatingMode::scores), model->predict_scores(ds.row(i)));
    }
}

TEST(Committee, SingleMemberReproducesItsLearner) {
    const auto train = make_blobs(20, 4, 3, 11, 1.5);
    const auto test = make_blobs(15, 4, 3, 12, 1.5);
    SeedStream rng(6);
    for (auto kind : all_learner_kinds()) {
        const auto model = fit(LearnerSpec::make(kind, {}, 3), train);
        WeightVector w;
        for (int c = 0; c < 4; ++c) w.w.push_back(0.1 + 2.9 * rng.uniform01());
        const Committee committee({{model, w, std::nullopt}}, 4, RatingMode::onehot);
        EXPECT_EQ(committee.predict_all(test), model->predict_all(test)) << to_string(kind);
        for (std::size_t i = 0; i < test.size(); ++i) EXPECT_EQ(predict_committee(committee, test.row(i)), model->predict(test.row(i)));
    }
}

TEST(Committee, PredictMatchesManualAggregation) {
    const std::size_t m = 3, d = 2;
    const auto a = std::make_shared<ScriptedModel>(m, d, [](auto x, auto out) {
        out[0] = 0.5;
        out[1] = x[0] > 0 ? 0.5 : 0.0;
        out[2] = x[1] > 0 ? 0.5 : 0.0;
    });
    const auto b = std::make_shared<ScriptedModel>(m, d, [](auto, auto out) {
        out[0] = 0.2;
        out[1] = 0.3;
        out[2] = 0.5;
    });
    const WeightVector wa{{1.0, 1.5, 0.5}}, wb{{2.0, 1.0, 1.0}};
    const Committee c({{a, wa, std::nullopt}, {b, wb, std::nullopt}}, m, RatingMode::scores, {"x", "y", "z"});
    EXPECT_EQ(c.scores(std::vector<double>{1, 1}), (std::vector<double>{0.9, 1.05, 0.75}));
    EXPECT_EQ(c.predict(std::vector<double>{1, 1}), 1);
    EXPECT_EQ(c.predict(std::vector<double>{-1, -1}), 0);
    EXPECT_EQ(c.class_names()[2], "z");
}

TEST(Committee, ThreadedPredictionKeepsRowOrder) {
    const auto train = make_blobs(30, 3, 4, 2);
    const auto fitted = fit_committee(train, small_roster(), WeightProtocol::resubstitution(), 0).committee;
    const auto test = make_blobs(40, 3, 4, 3);
    EXPECT_EQ(fitted.predict_all(test, 4), fitted.predict_all(test, 1));
}

TEST(Committee, Validation) {
    const auto ds = make_blobs(10, 3, 2, 1);
    const auto model = fit(LearnerSpec::make(LearnerKind::knn), ds);
    const WeightVector ok{{1, 1, 1}};
    EXPECT_THROW(Committee({}, 3, RatingMode::scores), EnsembleError);
    EXPECT_THROW(Committee({{nullptr, ok, std::nullopt}}, 3, RatingMode::scores), EnsembleError);
    EXPECT_THROW(Committee({{model, WeightVector{{1, 1}}, std::nullopt}}, 3, RatingMode::scores), EnsembleError);
    EXPECT_THROW(Committee({{model, WeightVector{{1, 3.5, 1}}, std::nullopt}}, 3, RatingMode::scores), EnsembleError);
    EXPECT_THROW(Committee({{model, ok, std::nullopt}}, 4, RatingMode::scores), EnsembleError);
    EXPECT_THROW(Committee({{model, ok, std::nullopt}}, 3, RatingMode::scores, {"a"}), EnsembleError);
    const auto other = fit(LearnerSpec::make(LearnerKind::knn), make_blobs(10, 3, 5, 1));
    EXPECT_THROW(Committee({{model, ok, std::nullopt}, {other, ok, std::nullopt}}, 3, RatingMode::scores),
                 EnsembleError);
}

// ---------------------------------------------------------------------------
// Fitting

TEST(Fit, ResubstitutionWeightsComeFromTrainingPredictions) {
    const auto train = make_blobs(25, 3, 3, 21, 1.0);
    const auto specs = small_roster();
    const auto result = fit_committee(train, specs, WeightProtocol::resubstitution(), 0);
    ASSERT_EQ(result.committee.size(), specs.size());
    for (std::size_t k = 0; k < specs.size(); ++k) {
        const auto& mem = result.committee.members()[k];
        const auto model = fit(specs[k], train);
        const auto pred = model->predict_all(train);
        for (std::size_t c = 0; c < 3; ++c) {
            std::size_t tp = 0, fp = 0, fn = 0, hit = 0;
            for (std::size_t i = 0; i < train.size(); ++i) {
                const bool truth = train.label(i) == static_cast<int>(c), said = pred[i] == static_cast<int>(c);
                tp += truth && said;
                fp += !truth && said;
                fn += truth && !said;
                hit += pred[i] == train.label(i);
            }
            const double p = tp + fp ? double(tp) / double(tp + fp) : 0.0;
            const double r = tp + fn ? double(tp) / double(tp + fn) : 0.0;
            const double a = double(hit) / double(train.size());
            EXPECT_NEAR(mem.weights[c], p + r + a, 1e-12) << specs[k].label() << " class " << c;
        }
        EXPECT_EQ(mem.model->predict_all(train), pred);
    }
}

TEST(Fit, ExternalWeightsUseTheGivenSet) {
    const auto train = make_blobs(25, 3, 3, 21, 1.0);
    const auto eval = std::make_shared<const Dataset>(make_blobs(10, 3, 3, 22, 1.0));
    const auto specs = small_roster();
    const auto result = fit_committee(train, specs, WeightProtocol::external(eval), 0, {.rating_mode = RatingMode::onehot});
    EXPECT_EQ(result.committee.rating_mode(), RatingMode::onehot);
    for (std::size_t k = 0; k < specs.size(); ++k) {
        const auto model = fit(specs[k], train);
        const auto pm = per_class_metrics(confusion_matrix(eval->labels(), model->predict_all(*eval), 3));
        EXPECT_EQ(result.committee.members()[k].weights, learner_weights(pm));
    }
    const auto narrow = std::make_shared<const Dataset>(make_blobs(10, 3, 2, 22));
    EXPECT_THROW(fit_committee(train, specs, WeightProtocol::external(narrow), 0), EnsembleError);
    EXPECT_THROW(fit_committee(train, specs, WeightProtocol::external(nullptr), 0), EnsembleError);
}

TEST(Fit, ValidationRefitsOnTheFullTrainingSet) {
    const auto train = make_blobs(30, 3, 3, 31, 1.0);
    const auto specs = small_roster();
    const auto a = fit_committee(train, specs, WeightProtocol::validation(0.25), 9);
    const auto b = fit_committee(train, specs, WeightProtocol::validation(0.25), 9, {.jobs = 4});
    for (std::size_t k = 0; k < specs.size(); ++k) {
        const auto direct = fit(specs[k], train);
        const auto& ma = a.committee.members()[k];
        EXPECT_EQ(ma.model->predict_all(train), direct->predict_all(train));
        EXPECT_EQ(ma.weights, b.committee.members()[k].weights);
        ASSERT_TRUE(ma.metrics.has_value());
        EXPECT_EQ(learner_weights(*ma.metrics), ma.weights);
    }
    bool differs = false;
    for (std::uint64_t seed = 10; seed < 20 && !differs; ++seed) {
        const auto c = fit_committee(train, specs, WeightProtocol::validation(0.25), seed);
        for (std::size_t k = 0; k < specs.size(); ++k) differs = differs || c.committee.members()[k].weights != a.committee.members()[k].weights;
    }
    EXPECT_TRUE(differs);
    EXPECT_THROW(fit_committee(train, specs, WeightProtocol::validation(1.0), 0), EnsembleError);
    EXPECT_THROW(fit_committee(make_blobs(1, 3, 3, 1), specs, WeightProtocol::validation(0.25), 0), EnsembleError);
}

TEST(Fit, OvrAccuracyModeIsPassedThrough) {
    const auto train = make_blobs(20, 3, 3, 5, 0.8);
    const std::vector<LearnerSpec> specs{LearnerSpec::make(LearnerKind::knn, {{"k", "7"}})};
    const auto r = fit_committee(train, specs, WeightProtocol::resubstitution(), 0, {.accuracy_mode = AccuracyMode::one_vs_rest});
    const auto pm = per_class_metrics(confusion_matrix(train.labels(), fit(specs[0], train)->predict_all(train), 3),
                                      AccuracyMode::one_vs_rest);
    EXPECT_EQ(r.committee.members()[0].weights, learner_weights(pm));
}

TEST(Fit, FailedMembers) {
    const auto train = make_blobs(5, 2, 2, 3);
    const std::vector<LearnerSpec> specs{LearnerSpec::make(LearnerKind::knn, {{"k", "50"}}),
                                         LearnerSpec::make(LearnerKind::logreg)};
    EXPECT_THROW(fit_committee(train, specs, WeightProtocol::resubstitution(), 0), LearnerError);
    const auto r = fit_committee(train, specs, WeightProtocol::resubstitution(), 0, {.drop_failed = true});
    EXPECT_EQ(r.committee.size(), 1u);
    ASSERT_EQ(r.failures.size(), 1u);
    EXPECT_EQ(r.failures[0].learner, "knn");
    EXPECT_NE(r.failures[0].message.find("exceeds"), std::string::npos);
    const std::vector<LearnerSpec> doomed{specs[0]};
    EXPECT_THROW(fit_committee(train, doomed, WeightProtocol::resubstitution(), 0, {.drop_failed = true}), EnsembleError);
    EXPECT_THROW(fit_committee(train, std::vector<LearnerSpec>{}, WeightProtocol::resubstitution(), 0), EnsembleError);
}

TEST(Fit, ProtocolDescriptions) {
    EXPECT_EQ(WeightProtocol::validation(0.25).describe(), "validation:0.25");
    EXPECT_EQ(WeightProtocol::resubstitution().describe(), "resubstitution");
    EXPECT_EQ(WeightProtocol::external(nullptr).describe(), "external");
}

// ---------------------------------------------------------------------------
// Persistence

TEST(Persistence, RoundTripPreservesPredictionsAndIndicators) {
    const auto train = make_blobs(20, 3, 4, 41, 1.2);
    auto specs = small_roster();
    specs.push_back(LearnerSpec::make(LearnerKind::mlp_bp, {{"epochs", "20"}}, 3));
    specs.push_back(LearnerSpec::make(LearnerKind::linear_svm, {{"iterations", "50"}}, 3));
    specs[0].name = "knn three";
    const auto original = fit_committee(train, specs, WeightProtocol::validation(0.3), 2).committee;
    std::stringstream buf;
    save_committee(original, buf);
    const auto back = load_committee(buf);
    ASSERT_EQ(back.size(), original.size());
    EXPECT_EQ(back.class_names(), original.class_names());
    EXPECT_EQ(back.rating_mode(), original.rating_mode());
    for (std::size_t k = 0; k < back.size(); ++k) {
        const auto &a = original.members()[k], &b = back.members()[k];
        EXPECT_EQ(b.weights, a.weights);
        EXPECT_EQ(b.model->spec().label(), a.model->spec().label());
        EXPECT_EQ(b.model->spec().hyperparameters, a.model->spec().hyperparameters);
        EXPECT_EQ(b.model->spec().seed, a.model->spec().seed);
        ASSERT_TRUE(b.metrics.has_value());
        EXPECT_EQ(b.metrics->precision, a.metrics->precision);
        EXPECT_EQ(b.metrics->recall, a.metrics->recall);
        EXPECT_EQ(b.metrics->accuracy, a.metrics->accuracy);
    }
    const auto test = make_blobs(20, 3, 4, 42, 1.2);
    for (std::size_t i = 0; i < test.size(); ++i) EXPECT_EQ(back.scores(test.row(i)), original.scores(test.row(i)));
    std::stringstream again;
    save_committee(back, again);
    EXPECT_EQ(again.str(), buf.str());
}

TEST(Persistence, MalformedFilesNameTheLine) {
    const auto train = make_blobs(10, 2, 2, 1);
    const std::vector<LearnerSpec> specs{LearnerSpec::make(LearnerKind::knn, {{"k", "3"}})};
    std::stringstream buf;
    save_committee(fit_committee(train, specs, WeightProtocol::resubstitution(), 0).committee, buf);
    const auto text = buf.str();
    const auto error_for = [](const std::string& body) {
        std::istringstream in(body);
        try {
            load_committee(in, "c.committee");
        } catch (const std::exception& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    EXPECT_NE(error_for("not-a-committee 1\n").find("c.committee:1"), std::string::npos);
    auto bad_weight = text;
    const auto pos = bad_weight.find("weights ");
    bad_weight.replace(pos, 8, "weights x ");
    EXPECT_FALSE(error_for(bad_weight).empty());
    EXPECT_FALSE(error_for(text.substr(0, text.size() / 2)).empty());
    EXPECT_TRUE(error_for(text).empty());
}

TEST(Persistence, FileRoundTrip) {
    const auto train = make_blobs(10, 2, 2, 1);
    const std::vector<LearnerSpec> specs{LearnerSpec::make(LearnerKind::random_forest, {{"trees", "3"}})};
    const auto c = fit_committee(train, specs, WeightProtocol::resubstitution(), 0).committee;
    const auto path = std::filesystem::temp_directory_path() / "gdm_ensemble_test.committee";
    save_committee(c, path);
    const auto back = load_committee(path);
    std::filesystem::remove(path);
    for (std::size_t i = 0; i < train.size(); ++i) EXPECT_EQ(back.predict(row_of(train, i)), c.predict(row_of(train, i)));
    EXPECT_THROW(load_committee(std::filesystem::path("/nonexistent/x.committee")), EnsembleError);
}
