#include "gdm/learner_models.hpp"

#include <cmath>
#include <numeric>

namespace gdm {

namespace {

Eigen::VectorXd softmax(const Eigen::VectorXd& z) {
    Eigen::VectorXd e = (z.array() - z.maxCoeff()).exp();
    return e / e.sum();
}

}  // namespace

MlpModel::MlpModel(LearnerSpec spec, std::size_t num_classes, Eigen::MatrixXd w1, Eigen::VectorXd b1,
                   Eigen::MatrixXd w2, Eigen::VectorXd b2)
    : TrainedModel(std::move(spec), num_classes, static_cast<std::size_t>(w1.cols())),
      w1_(std::move(w1)),
      b1_(std::move(b1)),
      w2_(std::move(w2)),
      b2_(std::move(b2)) {
    const auto hidden = w1_.rows();
    if (hidden == 0) throw LearnerError("mlp_bp: zero hidden nodes");
    if (b1_.size() != hidden || w2_.cols() != hidden || static_cast<std::size_t>(w2_.rows()) != num_classes ||
        static_cast<std::size_t>(b2_.size()) != num_classes) {
        throw LearnerError("mlp_bp: inconsistent weight shapes");
    }
}

std::shared_ptr<const MlpModel> MlpModel::train(const LearnerSpec& spec, const Dataset& train) {
    const auto& hp = spec.hyperparameters;
    const auto hidden = static_cast<Eigen::Index>(hp.count("hidden"));
    if (hidden == 0) throw LearnerError("mlp_bp: zero hidden nodes");
    const double lr = hp.real("learning_rate");
    const auto epochs = hp.integer("epochs");
    const double l2 = hp.real("l2");
    const auto d = static_cast<Eigen::Index>(train.num_features());
    const auto m = static_cast<Eigen::Index>(train.num_classes());

    SeedStream rng = SeedStream(spec.seed).derive("mlp_bp");
    const double s1 = 1.0 / std::sqrt(static_cast<double>(d));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
    Eigen::MatrixXd w1(hidden, d);
    Eigen::MatrixXd w2(m, hidden);
    for (Eigen::Index i = 0; i < hidden; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) w1(i, j) = rng.uniform(-s1, s1);
    }
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < hidden; ++j) w2(i, j) = rng.uniform(-s2, s2);
    }
    Eigen::VectorXd b1 = Eigen::VectorXd::Zero(hidden);
    Eigen::VectorXd b2 = Eigen::VectorXd::Zero(m);

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::int64_t epoch = 0; epoch < epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        for (auto i : order) {
            const auto row = train.row(i);
            const Eigen::Map<const Eigen::VectorXd> x(row.data(), d);
            const Eigen::VectorXd h = (w1 * x + b1).unaryExpr([](double v) { return detail::sigmoid(v); });
            Eigen::VectorXd delta2 = softmax(w2 * h + b2);
            delta2(train.label(i)) -= 1.0;
            const Eigen::VectorXd delta1 = (w2.transpose() * delta2).cwiseProduct(h.cwiseProduct((1.0 - h.array()).matrix()));
            w2 -= lr * (delta2 * h.transpose() + l2 * w2);
            b2 -= lr * delta2;
            w1 -= lr * (delta1 * x.transpose() + l2 * w1);
            b1 -= lr * delta1;
        }
    }
    if (!w1.allFinite() || !w2.allFinite()) throw LearnerError("mlp_bp: training diverged (reduce learning_rate)");
    return std::make_shared<const MlpModel>(spec, train.num_classes(), std::move(w1), std::move(b1), std::move(w2),
                                            std::move(b2));
}

std::shared_ptr<const MlpModel> MlpModel::restore(const LearnerSpec& spec, std::size_t m, std::size_t d,
                                                  const ParameterSet& params) {
    const auto& b1 = detail::find_array(params, "b1");
    if (b1.shape.size() != 1) throw LearnerError("mlp_bp: bad b1 block");
    const std::size_t hidden = b1.shape[0];
    return std::make_shared<const MlpModel>(spec, m, detail::to_matrix(detail::find_array(params, "w1"), hidden, d),
                                            detail::to_vector(b1, hidden),
                                            detail::to_matrix(detail::find_array(params, "w2"), m, hidden),
                                            detail::to_vector(detail::find_array(params, "b2"), m));
}

void MlpModel::compute_scores(std::span<const double> x, std::span<double> out) const {
    const Eigen::Map<const Eigen::VectorXd> q(x.data(), static_cast<Eigen::Index>(x.size()));
    const Eigen::VectorXd h = (w1_ * q + b1_).unaryExpr([](double v) { return detail::sigmoid(v); });
    const Eigen::VectorXd p = softmax(w2_ * h + b2_);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] = p(static_cast<Eigen::Index>(c));
}

ParameterSet MlpModel::parameters() const {
    return {detail::make_array("w1", w1_), detail::make_array("b1", b1_), detail::make_array("w2", w2_),
            detail::make_array("b2", b2_)};
}

}  // namespace gdm
