#include "gdm/learner_models.hpp"

namespace gdm {

ElmModel::ElmModel(LearnerSpec spec, std::size_t num_classes, Eigen::MatrixXd hidden_weights,
                   Eigen::VectorXd hidden_bias, Eigen::MatrixXd output_weights)
    : TrainedModel(std::move(spec), num_classes, static_cast<std::size_t>(hidden_weights.cols())),
      hidden_w_(std::move(hidden_weights)),
      hidden_b_(std::move(hidden_bias)),
      output_w_(std::move(output_weights)) {
    const auto hidden = hidden_w_.rows();
    if (hidden == 0) throw LearnerError("elm: zero hidden nodes");
    if (hidden_b_.size() != hidden || output_w_.rows() != hidden ||
        static_cast<std::size_t>(output_w_.cols()) != num_classes) {
        throw LearnerError("elm: inconsistent weight shapes");
    }
}

Eigen::MatrixXd ElmModel::hidden_activations(const FeatureMatrix& x) const {
    Eigen::MatrixXd z = x * hidden_w_.transpose();
    z.rowwise() += hidden_b_.transpose();
    return z.unaryExpr([](double v) { return detail::sigmoid(v); });
}

Eigen::VectorXd ElmModel::raw_outputs(std::span<const double> x) const {
    const Eigen::Map<const Eigen::VectorXd> q(x.data(), static_cast<Eigen::Index>(x.size()));
    const Eigen::VectorXd h = (hidden_w_ * q + hidden_b_).unaryExpr([](double v) { return detail::sigmoid(v); });
    return output_w_.transpose() * h;
}

std::shared_ptr<const ElmModel> ElmModel::train(const LearnerSpec& spec, const Dataset& train) {
    const auto& hp = spec.hyperparameters;
    const auto hidden = static_cast<Eigen::Index>(hp.count("hidden"));
    if (hidden == 0) throw LearnerError("elm: zero hidden nodes");
    const double ridge = hp.real("ridge");
    const auto d = static_cast<Eigen::Index>(train.num_features());
    const auto m = static_cast<Eigen::Index>(train.num_classes());
    const auto n = static_cast<Eigen::Index>(train.size());

    SeedStream rng = SeedStream(spec.seed).derive("elm");
    Eigen::MatrixXd w(hidden, d);
    Eigen::VectorXd b(hidden);
    for (Eigen::Index i = 0; i < hidden; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) w(i, j) = rng.uniform(-1.0, 1.0);
        b(i) = rng.uniform(-1.0, 1.0);
    }

    Eigen::MatrixXd h = train.features() * w.transpose();
    h.rowwise() += b.transpose();
    h = h.unaryExpr([](double v) { return detail::sigmoid(v); });
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, m);
    for (Eigen::Index i = 0; i < n; ++i) t(i, train.label(static_cast<std::size_t>(i))) = 1.0;

    Eigen::MatrixXd beta;
    if (ridge > 0.0) {
        Eigen::MatrixXd gram = h.transpose() * h;
        gram.diagonal().array() += ridge;
        beta = gram.ldlt().solve(h.transpose() * t);
    } else {
        beta = h.completeOrthogonalDecomposition().solve(t);
    }
    if (!beta.allFinite()) throw LearnerError("elm: output weights are not finite");
    return std::make_shared<const ElmModel>(spec, train.num_classes(), std::move(w), std::move(b), std::move(beta));
}

std::shared_ptr<const ElmModel> ElmModel::restore(const LearnerSpec& spec, std::size_t m, std::size_t d,
                                                  const ParameterSet& params) {
    const auto& hb = detail::find_array(params, "hidden_bias");
    if (hb.shape.size() != 1) throw LearnerError("elm: bad hidden_bias block");
    const std::size_t hidden = hb.shape[0];
    return std::make_shared<const ElmModel>(spec, m, detail::to_matrix(detail::find_array(params, "hidden_weights"), hidden, d),
                                            detail::to_vector(hb, hidden),
                                            detail::to_matrix(detail::find_array(params, "output_weights"), hidden, m));
}

void ElmModel::compute_scores(std::span<const double> x, std::span<double> out) const {
    const Eigen::VectorXd raw = raw_outputs(x).cwiseMax(0.0).cwiseMin(1.0);
    const double total = raw.sum();
    for (std::size_t c = 0; c < out.size(); ++c) {
        out[c] = total > 0.0 ? raw(static_cast<Eigen::Index>(c)) / total : 1.0 / static_cast<double>(out.size());
    }
}

ParameterSet ElmModel::parameters() const {
    return {detail::make_array("hidden_weights", hidden_w_), detail::make_array("hidden_bias", hidden_b_),
            detail::make_array("output_weights", output_w_)};
}

}  // namespace gdm
