#include "gdm/learner_models.hpp"

#include <cmath>

namespace gdm {

namespace {

// Row-wise softmax of z, shifted by the row max.
Eigen::MatrixXd softmax_rows(Eigen::MatrixXd z) {
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        const double mx = z.row(i).maxCoeff();
        z.row(i) = (z.row(i).array() - mx).exp();
        z.row(i) /= z.row(i).sum();
    }
    return z;
}

}  // namespace

SoftmaxObjective softmax_objective(const Eigen::MatrixXd& coefficients, const FeatureMatrix& x,
                                   std::span<const int> y, double lambda) {
    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();
    const Eigen::Index m = coefficients.cols();
    if (coefficients.rows() != d + 1) throw LearnerError("logreg: coefficient shape mismatch");
    if (static_cast<Eigen::Index>(y.size()) != n || n == 0) throw LearnerError("logreg: label count mismatch");

    const auto weights = coefficients.topRows(d);
    const auto bias = coefficients.row(d);
    Eigen::MatrixXd z = x * weights;
    z.rowwise() += bias;

    // log-sum-exp per row for a stable loss
    double nll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double mx = z.row(i).maxCoeff();
        const double lse = mx + std::log((z.row(i).array() - mx).exp().sum());
        nll += lse - z(i, y[static_cast<std::size_t>(i)]);
    }
    const double inv_n = 1.0 / static_cast<double>(n);

    Eigen::MatrixXd residual = softmax_rows(std::move(z));
    for (Eigen::Index i = 0; i < n; ++i) residual(i, y[static_cast<std::size_t>(i)]) -= 1.0;

    SoftmaxObjective obj;
    obj.loss = nll * inv_n + 0.5 * lambda * weights.squaredNorm();
    obj.gradient.resize(d + 1, m);
    obj.gradient.topRows(d) = inv_n * (x.transpose() * residual) + lambda * weights;
    obj.gradient.row(d) = inv_n * residual.colwise().sum();
    return obj;
}

LogisticRegressionModel::LogisticRegressionModel(LearnerSpec spec, std::size_t num_classes,
                                                 Eigen::MatrixXd coefficients, int iterations, double gradient_norm)
    : TrainedModel(std::move(spec), num_classes, static_cast<std::size_t>(coefficients.rows() - 1)),
      coef_(std::move(coefficients)),
      iterations_(iterations),
      gradient_norm_(gradient_norm) {
    if (static_cast<std::size_t>(coef_.cols()) != num_classes) throw LearnerError("logreg: coefficient shape mismatch");
}

std::shared_ptr<const LogisticRegressionModel> LogisticRegressionModel::train(const LearnerSpec& spec,
                                                                              const Dataset& train) {
    const auto& hp = spec.hyperparameters;
    const double lambda = hp.real("lambda");
    const double step = hp.real("step");
    const auto max_iter = hp.integer("max_iter");
    const double tol = hp.real("tol");

    const auto d = static_cast<Eigen::Index>(train.num_features());
    const auto m = static_cast<Eigen::Index>(train.num_classes());
    Eigen::MatrixXd coef = Eigen::MatrixXd::Zero(d + 1, m);
    int iter = 0;
    double gnorm = 0.0;
    for (;; ++iter) {
        const auto obj = softmax_objective(coef, train.features(), train.labels(), lambda);
        gnorm = obj.gradient.norm();
        if (gnorm < tol || iter == max_iter) break;
        coef -= step * obj.gradient;
    }
    if (!coef.allFinite()) throw LearnerError("logreg: training diverged (reduce step)");
    return std::make_shared<const LogisticRegressionModel>(spec, train.num_classes(), std::move(coef), iter, gnorm);
}

std::shared_ptr<const LogisticRegressionModel> LogisticRegressionModel::restore(const LearnerSpec& spec,
                                                                                std::size_t m, std::size_t d,
                                                                                const ParameterSet& params) {
    return std::make_shared<const LogisticRegressionModel>(
        spec, m, detail::to_matrix(detail::find_array(params, "coefficients"), d + 1, m));
}

void LogisticRegressionModel::compute_scores(std::span<const double> x, std::span<double> out) const {
    const auto d = coef_.rows() - 1;
    const Eigen::Map<const Eigen::RowVectorXd> q(x.data(), d);
    Eigen::RowVectorXd z = q * coef_.topRows(d) + coef_.row(d);
    z = (z.array() - z.maxCoeff()).exp();
    z /= z.sum();
    for (Eigen::Index c = 0; c < z.size(); ++c) out[static_cast<std::size_t>(c)] = z(c);
}

ParameterSet LogisticRegressionModel::parameters() const { return {detail::make_array("coefficients", coef_)}; }

}  // namespace gdm
