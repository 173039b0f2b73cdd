#include "gdm/learner_models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gdm {

KnnModel::KnnModel(LearnerSpec spec, std::size_t num_classes, FeatureMatrix train_x, std::vector<int> train_y)
    : TrainedModel(std::move(spec), num_classes, static_cast<std::size_t>(train_x.cols())),
      k_(this->spec().hyperparameters.count("k")),
      train_x_(std::move(train_x)),
      train_y_(std::move(train_y)) {
    if (k_ == 0) throw LearnerError("knn: k must be at least 1");
    if (k_ > train_y_.size()) {
        throw LearnerError("knn: k = " + std::to_string(k_) + " exceeds the " + std::to_string(train_y_.size()) +
                           " training rows");
    }
    if (static_cast<std::size_t>(train_x_.rows()) != train_y_.size()) throw LearnerError("knn: row/label mismatch");
}

std::shared_ptr<const KnnModel> KnnModel::train(const LearnerSpec& spec, const Dataset& train) {
    return std::make_shared<const KnnModel>(spec, train.num_classes(), train.features(), train.labels());
}

std::shared_ptr<const KnnModel> KnnModel::restore(const LearnerSpec& spec, std::size_t m, std::size_t d,
                                                  const ParameterSet& params) {
    const auto& ys = detail::find_array(params, "train_y");
    if (ys.shape.size() != 1) throw LearnerError("knn: bad train_y block");
    const std::size_t n = ys.shape[0];
    FeatureMatrix x = detail::to_matrix(detail::find_array(params, "train_x"), n, d);
    std::vector<int> y;
    y.reserve(n);
    for (double v : ys.values) {
        if (v < 0 || v >= static_cast<double>(m) || v != std::floor(v)) throw LearnerError("knn: bad stored label");
        y.push_back(static_cast<int>(v));
    }
    return std::make_shared<const KnnModel>(spec, m, std::move(x), std::move(y));
}

std::vector<std::size_t> KnnModel::neighbors(std::span<const double> x) const {
    const Eigen::Map<const Eigen::RowVectorXd> q(x.data(), static_cast<Eigen::Index>(x.size()));
    const Eigen::VectorXd dist = (train_x_.rowwise() - q).rowwise().squaredNorm();
    std::vector<std::size_t> idx(train_y_.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const auto closer = [&](std::size_t a, std::size_t b) {
        const double da = dist(static_cast<Eigen::Index>(a));
        const double db = dist(static_cast<Eigen::Index>(b));
        return da < db || (da == db && a < b);
    };
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k_), idx.end(), closer);
    idx.resize(k_);
    return idx;
}

void KnnModel::compute_scores(std::span<const double> x, std::span<double> out) const {
    for (auto i : neighbors(x)) out[static_cast<std::size_t>(train_y_[i])] += 1.0;
    for (auto& v : out) v /= static_cast<double>(k_);
}

ParameterSet KnnModel::parameters() const {
    ParameterSet p;
    p.push_back(detail::make_array("train_x", Eigen::MatrixXd(train_x_)));
    Eigen::VectorXd y(static_cast<Eigen::Index>(train_y_.size()));
    for (std::size_t i = 0; i < train_y_.size(); ++i) y(static_cast<Eigen::Index>(i)) = train_y_[i];
    p.push_back(detail::make_array("train_y", y));
    return p;
}

}  // namespace gdm
