#include "gdm/learner_models.hpp"

#include <cmath>

namespace gdm {

LinearSvmModel::LinearSvmModel(LearnerSpec spec, std::size_t num_classes, Eigen::MatrixXd weights,
                               Eigen::VectorXd bias)
    : TrainedModel(std::move(spec), num_classes, static_cast<std::size_t>(weights.cols())),
      weights_(std::move(weights)),
      bias_(std::move(bias)) {
    if (static_cast<std::size_t>(weights_.rows()) != num_classes ||
        static_cast<std::size_t>(bias_.size()) != num_classes) {
        throw LearnerError("linear_svm: inconsistent weight shapes");
    }
}

std::shared_ptr<const LinearSvmModel> LinearSvmModel::train(const LearnerSpec& spec, const Dataset& train) {
    const auto& hp = spec.hyperparameters;
    const double lambda = hp.real("lambda");
    const double step = hp.real("step");
    const auto iterations = hp.integer("iterations");
    const auto& x = train.features();
    const auto n = x.rows();
    const auto d = x.cols();
    const auto m = static_cast<Eigen::Index>(train.num_classes());
    const double inv_n = 1.0 / static_cast<double>(n);

    Eigen::MatrixXd weights(m, d);
    Eigen::VectorXd bias(m);
    for (Eigen::Index c = 0; c < m; ++c) {
        Eigen::VectorXd y(n);
        for (Eigen::Index i = 0; i < n; ++i) y(i) = train.label(static_cast<std::size_t>(i)) == c ? 1.0 : -1.0;

        Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
        double b = 0.0;
        Eigen::VectorXd best_w = w;
        double best_b = b;
        double best_obj = std::numeric_limits<double>::infinity();
        for (std::int64_t t = 1; t <= iterations + 1; ++t) {
            const Eigen::VectorXd margin = y.cwiseProduct((x * w).array().matrix() + Eigen::VectorXd::Constant(n, b));
            const Eigen::VectorXd hinge = (1.0 - margin.array()).max(0.0).matrix();
            const double obj = 0.5 * lambda * w.squaredNorm() + inv_n * hinge.sum();
            if (obj < best_obj) {
                best_obj = obj;
                best_w = w;
                best_b = b;
            }
            if (t > iterations) break;
            // Subgradient: active rows are those with margin < 1.
            const Eigen::VectorXd coeff = (margin.array() < 1.0).select(-y, 0.0);
            const Eigen::VectorXd gw = lambda * w + inv_n * (x.transpose() * coeff);
            const double gb = inv_n * coeff.sum();
            const double eta = step / std::sqrt(static_cast<double>(t));
            w -= eta * gw;
            b -= eta * gb;
        }
        weights.row(c) = best_w.transpose();
        bias(c) = best_b;
    }
    if (!weights.allFinite() || !bias.allFinite()) throw LearnerError("linear_svm: training diverged");
    return std::make_shared<const LinearSvmModel>(spec, train.num_classes(), std::move(weights), std::move(bias));
}

std::shared_ptr<const LinearSvmModel> LinearSvmModel::restore(const LearnerSpec& spec, std::size_t m, std::size_t d,
                                                              const ParameterSet& params) {
    return std::make_shared<const LinearSvmModel>(spec, m,
                                                  detail::to_matrix(detail::find_array(params, "weights"), m, d),
                                                  detail::to_vector(detail::find_array(params, "bias"), m));
}

Eigen::VectorXd LinearSvmModel::margins(std::span<const double> x) const {
    const Eigen::Map<const Eigen::VectorXd> q(x.data(), static_cast<Eigen::Index>(x.size()));
    return weights_ * q + bias_;
}

void LinearSvmModel::compute_scores(std::span<const double> x, std::span<double> out) const {
    const Eigen::VectorXd g = margins(x);
    const double lo = g.minCoeff();
    const double hi = g.maxCoeff();
    for (std::size_t c = 0; c < out.size(); ++c) {
        out[c] = hi > lo ? (g(static_cast<Eigen::Index>(c)) - lo) / (hi - lo) : 1.0 / static_cast<double>(out.size());
    }
}

ParameterSet LinearSvmModel::parameters() const {
    return {detail::make_array("weights", weights_), detail::make_array("bias", bias_)};
}

}  // namespace gdm
