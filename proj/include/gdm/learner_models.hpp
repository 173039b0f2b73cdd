#pragma once

// Concrete base learners. Most callers only need gdm/learners.hpp; these types
// are public so their internals can be inspected and tested directly.

#include "gdm/learners.hpp"
#include "gdm/random.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>

namespace gdm {

// ---------------------------------------------------------------------------
// k-nearest neighbours

class KnnModel final : public TrainedModel {
public:
    KnnModel(LearnerSpec spec, std::size_t num_classes, FeatureMatrix train_x, std::vector<int> train_y);

    static std::shared_ptr<const KnnModel> train(const LearnerSpec& spec, const Dataset& train);
    static std::shared_ptr<const KnnModel> restore(const LearnerSpec& spec, std::size_t m, std::size_t d,
                                                   const ParameterSet& params);

    /// Training-row indices of the k nearest rows, nearest first; equal
    /// distances ordered by row index.
    [[nodiscard]] std::vector<std::size_t> neighbors(std::span<const double> x) const;

    [[nodiscard]] ParameterSet parameters() const override;

protected:
    void compute_scores(std::span<const double> x, std::span<double> out) const override;

private:
    std::size_t k_;
    FeatureMatrix train_x_;
    std::vector<int> train_y_;
};

// ---------------------------------------------------------------------------
// Multinomial logistic regression

/// Coefficients are (d + 1) x m; the last row is the unpenalized bias.
struct SoftmaxObjective {
    double loss = 0.0;
    Eigen::MatrixXd gradient;
};

/// Mean cross-entropy plus (lambda / 2) * ||W||^2 over the non-bias rows.
SoftmaxObjective softmax_objective(const Eigen::MatrixXd& coefficients, const FeatureMatrix& x,
                                   std::span<const int> y, double lambda);

class LogisticRegressionModel final : public TrainedModel {
public:
    LogisticRegressionModel(LearnerSpec spec, std::size_t num_classes, Eigen::MatrixXd coefficients,
                            int iterations = 0, double gradient_norm = 0.0);

    static std::shared_ptr<const LogisticRegressionModel> train(const LearnerSpec& spec, const Dataset& train);
    static std::shared_ptr<const LogisticRegressionModel> restore(const LearnerSpec& spec, std::size_t m,
                                                                  std::size_t d, const ParameterSet& params);

    [[nodiscard]] const Eigen::MatrixXd& coefficients() const { return coef_; }
    [[nodiscard]] int iterations() const { return iterations_; }
    [[nodiscard]] double final_gradient_norm() const { return gradient_norm_; }

    [[nodiscard]] ParameterSet parameters() const override;

protected:
    void compute_scores(std::span<const double> x, std::span<double> out) const override;

private:
    Eigen::MatrixXd coef_;
    int iterations_;
    double gradient_norm_;
};

// ---------------------------------------------------------------------------
// CART and random forest

struct TreeOptions {
    std::size_t max_depth = std::numeric_limits<std::size_t>::max();
    std::size_t min_split = 2;
    /// Candidate features drawn per split; 0 means all features in index order.
    std::size_t features_per_split = 0;
};

/// Binary classification tree grown with the Gini criterion. A row goes left
/// when x[feature] <= threshold.
class DecisionTree {
public:
    struct Node {
        int feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        int label = 0;
    };

    /// Grows on the given training rows (duplicates allowed, as for a bootstrap sample).
    static DecisionTree grow(const FeatureMatrix& x, std::span<const int> y, std::size_t num_classes,
                             std::span<const std::size_t> rows, const TreeOptions& options, SeedStream& rng);

    explicit DecisionTree(std::vector<Node> nodes);

    [[nodiscard]] int predict(std::span<const double> x) const;
    [[nodiscard]] const std::vector<Node>& nodes() const { return nodes_; }
    [[nodiscard]] std::size_t depth() const;

    friend bool operator==(const DecisionTree& a, const DecisionTree& b);

private:
    std::vector<Node> nodes_;
};

double gini_impurity(std::span<const std::size_t> class_counts, std::size_t total);

class RandomForestModel final : public TrainedModel {
public:
    RandomForestModel(LearnerSpec spec, std::size_t num_classes, std::size_t num_features,
                      std::vector<DecisionTree> trees);

    static std::shared_ptr<const RandomForestModel> train(const LearnerSpec& spec, const Dataset& train);
    static std::shared_ptr<const RandomForestModel> restore(const LearnerSpec& spec, std::size_t m, std::size_t d,
                                                            const ParameterSet& params);

    [[nodiscard]] const std::vector<DecisionTree>& trees() const { return trees_; }

    [[nodiscard]] ParameterSet parameters() const override;

protected:
    void compute_scores(std::span<const double> x, std::span<double> out) const override;

private:
    std::vector<DecisionTree> trees_;
};

// ---------------------------------------------------------------------------
// Extreme learning machine

class ElmModel final : public TrainedModel {
public:
    ElmModel(LearnerSpec spec, std::size_t num_classes, Eigen::MatrixXd hidden_weights, Eigen::VectorXd hidden_bias,
             Eigen::MatrixXd output_weights);

    static std::shared_ptr<const ElmModel> train(const LearnerSpec& spec, const Dataset& train);
    static std::shared_ptr<const ElmModel> restore(const LearnerSpec& spec, std::size_t m, std::size_t d,
                                                   const ParameterSet& params);

    /// L x d input weights, L biases, L x m output weights.
    [[nodiscard]] const Eigen::MatrixXd& hidden_weights() const { return hidden_w_; }
    [[nodiscard]] const Eigen::VectorXd& hidden_bias() const { return hidden_b_; }
    [[nodiscard]] const Eigen::MatrixXd& output_weights() const { return output_w_; }

    /// n x L sigmoid activations.
    [[nodiscard]] Eigen::MatrixXd hidden_activations(const FeatureMatrix& x) const;

    /// Unclamped outputs h(x)^T beta.
    [[nodiscard]] Eigen::VectorXd raw_outputs(std::span<const double> x) const;

    [[nodiscard]] ParameterSet parameters() const override;

protected:
    void compute_scores(std::span<const double> x, std::span<double> out) const override;

private:
    Eigen::MatrixXd hidden_w_;
    Eigen::VectorXd hidden_b_;
    Eigen::MatrixXd output_w_;
};

// ---------------------------------------------------------------------------
// One-hidden-layer network trained by backpropagation

class MlpModel final : public TrainedModel {
public:
    MlpModel(LearnerSpec spec, std::size_t num_classes, Eigen::MatrixXd w1, Eigen::VectorXd b1, Eigen::MatrixXd w2,
             Eigen::VectorXd b2);

    static std::shared_ptr<const MlpModel> train(const LearnerSpec& spec, const Dataset& train);
    static std::shared_ptr<const MlpModel> restore(const LearnerSpec& spec, std::size_t m, std::size_t d,
                                                   const ParameterSet& params);

    [[nodiscard]] ParameterSet parameters() const override;

protected:
    void compute_scores(std::span<const double> x, std::span<double> out) const override;

private:
    Eigen::MatrixXd w1_;  // H x d
    Eigen::VectorXd b1_;
    Eigen::MatrixXd w2_;  // m x H
    Eigen::VectorXd b2_;
};

// ---------------------------------------------------------------------------
// One-vs-rest linear SVM

class LinearSvmModel final : public TrainedModel {
public:
    LinearSvmModel(LearnerSpec spec, std::size_t num_classes, Eigen::MatrixXd weights, Eigen::VectorXd bias);

    static std::shared_ptr<const LinearSvmModel> train(const LearnerSpec& spec, const Dataset& train);
    static std::shared_ptr<const LinearSvmModel> restore(const LearnerSpec& spec, std::size_t m, std::size_t d,
                                                         const ParameterSet& params);

    /// m x d, one row per class-vs-rest classifier.
    [[nodiscard]] const Eigen::MatrixXd& weights() const { return weights_; }
    [[nodiscard]] Eigen::VectorXd margins(std::span<const double> x) const;

    [[nodiscard]] ParameterSet parameters() const override;

protected:
    void compute_scores(std::span<const double> x, std::span<double> out) const override;

private:
    Eigen::MatrixXd weights_;
    Eigen::VectorXd bias_;
};

// ---------------------------------------------------------------------------
// Helpers shared by the implementations

namespace detail {

const NamedArray& find_array(const ParameterSet& params, std::string_view name);
NamedArray make_array(std::string name, const Eigen::MatrixXd& m);
NamedArray make_array(std::string name, const Eigen::VectorXd& v);
Eigen::MatrixXd to_matrix(const NamedArray& a, std::size_t rows, std::size_t cols);
Eigen::VectorXd to_vector(const NamedArray& a, std::size_t size);

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace detail

}  // namespace gdm
