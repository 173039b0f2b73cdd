#include "gdm/learner_models.hpp"
#include "gdm/text.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gdm {

namespace {

ParamSpec int_param(std::string name, std::string def, double min, double max, std::string help,
                    bool allow_inf = false) {
    ParamSpec p;
    p.name = std::move(name);
    p.type = ParamType::integer;
    p.default_value = std::move(def);
    p.min = min;
    p.max = max;
    p.allow_infinite = allow_inf;
    p.help = std::move(help);
    return p;
}

ParamSpec real_param(std::string name, std::string def, double min, double max, std::string help) {
    ParamSpec p;
    p.name = std::move(name);
    p.type = ParamType::real;
    p.default_value = std::move(def);
    p.min = min;
    p.max = max;
    p.help = std::move(help);
    return p;
}

ParamSpec bool_param(std::string name, std::string def, std::string help) {
    ParamSpec p;
    p.name = std::move(name);
    p.type = ParamType::boolean;
    p.default_value = std::move(def);
    p.help = std::move(help);
    return p;
}

ParamSpec choice_param(std::string name, std::string def, std::vector<std::string> choices, std::string help) {
    ParamSpec p;
    p.name = std::move(name);
    p.type = ParamType::choice;
    p.default_value = std::move(def);
    p.choices = std::move(choices);
    p.help = std::move(help);
    return p;
}

// k, trees and hidden accept 0 here so that fit() can report the degenerate
// configuration itself.
const std::vector<ParamSpec> kKnn = {
    int_param("k", "5", 0, 1e9, "number of neighbours (must not exceed the training size)"),
};

const std::vector<ParamSpec> kLogreg = {
    real_param("lambda", "0.0001", 0, 1e6, "L2 penalty on the non-bias coefficients"),
    real_param("step", "0.1", 1e-12, 1e3, "fixed gradient-descent step size"),
    int_param("max_iter", "2000", 1, 1e9, "iteration cap"),
    real_param("tol", "1e-06", 0, 1, "stop once the gradient Frobenius norm falls below this"),
};

const std::vector<ParamSpec> kForest = {
    int_param("trees", "100", 0, 1e7, "number of trees"),
    int_param("max_depth", "inf", 1, 1e9, "maximum tree depth ('inf' for unlimited)", true),
    int_param("min_split", "2", 2, 1e9, "minimum node size eligible for splitting"),
    bool_param("bootstrap", "true", "resample training rows with replacement for each tree"),
    choice_param("feature_subsample", "sqrt", {"sqrt", "all"},
                 "candidate features per split: ceil(sqrt(d)) drawn at random, or all"),
};

const std::vector<ParamSpec> kElm = {
    int_param("hidden", "100", 0, 1e6, "hidden nodes"),
    real_param("ridge", "1e-06", 0, 1e6, "ridge term for the output least squares (0 = plain least squares)"),
};

const std::vector<ParamSpec> kMlp = {
    int_param("hidden", "32", 0, 1e6, "hidden nodes"),
    real_param("learning_rate", "0.05", 1e-12, 1e3, "fixed SGD learning rate"),
    int_param("epochs", "200", 1, 1e8, "passes over the training set"),
    real_param("l2", "0.0001", 0, 1e3, "weight decay"),
};

const std::vector<ParamSpec> kSvm = {
    real_param("lambda", "0.001", 1e-12, 1e6, "L2 regularization strength"),
    real_param("step", "0.1", 1e-12, 1e3, "initial subgradient step (decays as step/sqrt(t))"),
    int_param("iterations", "1000", 1, 1e8, "full-batch subgradient iterations"),
};

std::string canonical(const ParamSpec& p, std::string_view value) {
    const auto v = text::trim(value);
    const auto fail = [&](const std::string& why) -> std::string {
        throw LearnerError("hyperparameter '" + p.name + "': " + why + " (got '" + std::string(v) + "')");
    };
    switch (p.type) {
        case ParamType::integer: {
            if (p.allow_infinite && (text::to_lower(v) == "inf" || text::to_lower(v) == "infinity")) return "inf";
            const auto i = text::parse_int(v);
            if (!i) return fail("expected an integer");
            if (static_cast<double>(*i) < p.min || static_cast<double>(*i) > p.max) {
                return fail("out of range [" + text::format_double(p.min) + ", " + text::format_double(p.max) + "]");
            }
            return std::to_string(*i);
        }
        case ParamType::real: {
            const auto r = text::parse_double(v);
            if (!r) return fail("expected a finite real number");
            if (*r < p.min || *r > p.max) {
                return fail("out of range [" + text::format_double(p.min) + ", " + text::format_double(p.max) + "]");
            }
            return text::format_double(*r);
        }
        case ParamType::boolean: {
            bool b = false;
            if (!text::parse_bool(v, b)) return fail("expected true/false");
            return b ? "true" : "false";
        }
        case ParamType::choice: {
            const auto lower = text::to_lower(v);
            if (std::find(p.choices.begin(), p.choices.end(), lower) == p.choices.end()) return fail("unknown choice");
            return lower;
        }
    }
    return fail("bad type");
}

}  // namespace

std::string to_string(LearnerKind kind) {
    switch (kind) {
        case LearnerKind::knn: return "knn";
        case LearnerKind::logreg: return "logreg";
        case LearnerKind::random_forest: return "random_forest";
        case LearnerKind::elm: return "elm";
        case LearnerKind::mlp_bp: return "mlp_bp";
        case LearnerKind::linear_svm: return "linear_svm";
    }
    return "?";
}

LearnerKind parse_learner_kind(std::string_view s) {
    const auto v = text::to_lower(text::trim(s));
    for (auto k : all_learner_kinds()) {
        if (v == to_string(k)) return k;
    }
    if (v == "lr") return LearnerKind::logreg;
    if (v == "rf") return LearnerKind::random_forest;
    if (v == "bp" || v == "mlp") return LearnerKind::mlp_bp;
    if (v == "svm") return LearnerKind::linear_svm;
    throw LearnerError("unknown learner kind '" + std::string(s) + "'");
}

std::vector<LearnerKind> all_learner_kinds() {
    return {LearnerKind::knn,    LearnerKind::logreg, LearnerKind::random_forest,
            LearnerKind::elm,    LearnerKind::mlp_bp, LearnerKind::linear_svm};
}

bool is_probabilistic(LearnerKind kind) { return kind != LearnerKind::linear_svm; }

const std::vector<ParamSpec>& hyperparameter_schema(LearnerKind kind) {
    switch (kind) {
        case LearnerKind::knn: return kKnn;
        case LearnerKind::logreg: return kLogreg;
        case LearnerKind::random_forest: return kForest;
        case LearnerKind::elm: return kElm;
        case LearnerKind::mlp_bp: return kMlp;
        case LearnerKind::linear_svm: return kSvm;
    }
    throw LearnerError("no schema for learner kind");
}

std::string learner_help() {
    std::ostringstream out;
    for (auto kind : all_learner_kinds()) {
        out << to_string(kind) << (is_probabilistic(kind) ? "" : "  (scores are rescaled margins)") << '\n';
        for (const auto& p : hyperparameter_schema(kind)) {
            out << "  " << p.name << " = " << p.default_value << "    " << p.help;
            if (p.type == ParamType::choice) {
                out << " {";
                for (std::size_t i = 0; i < p.choices.size(); ++i) out << (i ? "|" : "") << p.choices[i];
                out << '}';
            }
            out << '\n';
        }
    }
    return out.str();
}

// ---------------------------------------------------------------------------

Hyperparameters::Hyperparameters(LearnerKind kind) : kind_(kind) {
    for (const auto& p : hyperparameter_schema(kind)) values_[p.name] = canonical(p, p.default_value);
}

Hyperparameters& Hyperparameters::set(std::string_view key, std::string_view value) {
    const auto& schema = hyperparameter_schema(kind_);
    const auto k = text::trim(key);
    const auto it = std::find_if(schema.begin(), schema.end(), [&](const ParamSpec& p) { return p.name == k; });
    if (it == schema.end()) {
        throw LearnerError("unknown hyperparameter '" + std::string(k) + "' for " + gdm::to_string(kind_));
    }
    values_[it->name] = canonical(*it, value);
    return *this;
}

const std::string& Hyperparameters::raw(std::string_view key) const {
    const auto it = values_.find(std::string(key));
    if (it == values_.end()) throw LearnerError("hyperparameter '" + std::string(key) + "' not defined");
    return it->second;
}

double Hyperparameters::real(std::string_view key) const {
    const auto& v = raw(key);
    if (v == "inf") return std::numeric_limits<double>::infinity();
    return *text::parse_double(v);
}

long long Hyperparameters::integer(std::string_view key) const {
    const auto& v = raw(key);
    if (v == "inf") throw LearnerError("hyperparameter '" + std::string(key) + "' is unbounded");
    return *text::parse_int(v);
}

std::size_t Hyperparameters::count(std::string_view key) const {
    const auto& v = raw(key);
    if (v == "inf") return std::numeric_limits<std::size_t>::max();
    return static_cast<std::size_t>(*text::parse_int(v));
}

bool Hyperparameters::flag(std::string_view key) const { return raw(key) == "true"; }

const std::string& Hyperparameters::choice(std::string_view key) const { return raw(key); }

std::string Hyperparameters::to_string() const {
    std::string out;
    for (const auto& [k, v] : values_) {
        if (!out.empty()) out += ';';
        out += k + "=" + v;
    }
    return out;
}

Hyperparameters Hyperparameters::parse(LearnerKind kind, std::string_view s) {
    Hyperparameters hp(kind);
    for (auto item : text::split(s, ';')) {
        item = text::trim(item);
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string_view::npos) throw LearnerError("hyperparameter '" + std::string(item) + "' lacks '='");
        hp.set(item.substr(0, eq), item.substr(eq + 1));
    }
    return hp;
}

LearnerSpec LearnerSpec::make(LearnerKind kind, std::initializer_list<std::pair<std::string, std::string>> overrides,
                              std::uint64_t seed) {
    LearnerSpec spec;
    spec.kind = kind;
    spec.hyperparameters = Hyperparameters(kind);
    for (const auto& [k, v] : overrides) spec.hyperparameters.set(k, v);
    spec.seed = seed;
    return spec;
}

// ---------------------------------------------------------------------------

TrainedModel::TrainedModel(LearnerSpec spec, std::size_t num_classes, std::size_t num_features)
    : spec_(std::move(spec)), m_(num_classes), d_(num_features) {
    if (m_ < 2) throw LearnerError("a model needs at least two classes");
    if (d_ < 1) throw LearnerError("a model needs at least one feature");
}

std::vector<double> TrainedModel::predict_scores(std::span<const double> x) const {
    if (x.size() != d_) {
        throw LearnerError("instance has " + std::to_string(x.size()) + " features, model expects " +
                           std::to_string(d_));
    }
    for (double v : x) {
        if (!std::isfinite(v)) throw LearnerError("instance contains a non-finite value");
    }
    std::vector<double> out(m_, 0.0);
    compute_scores(x, out);
    for (auto& s : out) {
        if (!std::isfinite(s) || s < -1e-12 || s > 1.0 + 1e-12) {
            throw std::logic_error(to_string(kind()) + " produced a score outside [0, 1]");
        }
        s = std::clamp(s, 0.0, 1.0);
    }
    return out;
}

int TrainedModel::predict(std::span<const double> x) const {
    const auto scores = predict_scores(x);
    return static_cast<int>(argmax(scores));
}

std::vector<int> TrainedModel::predict_all(const Dataset& ds) const {
    std::vector<int> out(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) out[i] = predict(ds.row(i));
    return out;
}

std::size_t argmax(std::span<const double> scores) {
    if (scores.empty()) throw std::invalid_argument("argmax of an empty vector");
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i] > scores[best]) best = i;
    }
    return best;
}

std::shared_ptr<const TrainedModel> fit(const LearnerSpec& spec, const Dataset& train) {
    if (spec.hyperparameters.kind() != spec.kind) throw LearnerError("hyperparameters belong to a different kind");
    switch (spec.kind) {
        case LearnerKind::knn: return KnnModel::train(spec, train);
        case LearnerKind::logreg: return LogisticRegressionModel::train(spec, train);
        case LearnerKind::random_forest: return RandomForestModel::train(spec, train);
        case LearnerKind::elm: return ElmModel::train(spec, train);
        case LearnerKind::mlp_bp: return MlpModel::train(spec, train);
        case LearnerKind::linear_svm: return LinearSvmModel::train(spec, train);
    }
    throw LearnerError("unknown learner kind");
}

std::shared_ptr<const TrainedModel> restore_model(const LearnerSpec& spec, std::size_t m, std::size_t d,
                                                  const ParameterSet& params) {
    switch (spec.kind) {
        case LearnerKind::knn: return KnnModel::restore(spec, m, d, params);
        case LearnerKind::logreg: return LogisticRegressionModel::restore(spec, m, d, params);
        case LearnerKind::random_forest: return RandomForestModel::restore(spec, m, d, params);
        case LearnerKind::elm: return ElmModel::restore(spec, m, d, params);
        case LearnerKind::mlp_bp: return MlpModel::restore(spec, m, d, params);
        case LearnerKind::linear_svm: return LinearSvmModel::restore(spec, m, d, params);
    }
    throw LearnerError("unknown learner kind");
}

// ---------------------------------------------------------------------------

namespace detail {

const NamedArray& find_array(const ParameterSet& params, std::string_view name) {
    for (const auto& a : params) {
        if (a.name == name) return a;
    }
    throw LearnerError("parameter block '" + std::string(name) + "' missing");
}

NamedArray make_array(std::string name, const Eigen::MatrixXd& m) {
    NamedArray a{std::move(name), {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())}, {}};
    a.values.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) a.values.push_back(m(i, j));
    }
    return a;
}

NamedArray make_array(std::string name, const Eigen::VectorXd& v) {
    return NamedArray{std::move(name), {static_cast<std::size_t>(v.size())}, std::vector<double>(v.begin(), v.end())};
}

Eigen::MatrixXd to_matrix(const NamedArray& a, std::size_t rows, std::size_t cols) {
    if (a.shape != std::vector<std::size_t>{rows, cols} || a.values.size() != rows * cols) {
        throw LearnerError("parameter block '" + a.name + "' has the wrong shape");
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a.values[i * cols + j];
        }
    }
    return m;
}

Eigen::VectorXd to_vector(const NamedArray& a, std::size_t size) {
    if (a.shape != std::vector<std::size_t>{size} || a.values.size() != size) {
        throw LearnerError("parameter block '" + a.name + "' has the wrong shape");
    }
    return Eigen::Map<const Eigen::VectorXd>(a.values.data(), static_cast<Eigen::Index>(size));
}

}  // namespace detail

}  // namespace gdm
