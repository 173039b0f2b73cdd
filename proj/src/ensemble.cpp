#include "gdm/ensemble.hpp"

#include "gdm/parallel.hpp"
#include "gdm/random.hpp"
#include "gdm/text.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace gdm {

RatingMode parse_rating_mode(std::string_view s) {
    const auto v = text::to_lower(text::trim(s));
    if (v == "onehot" || v == "one-hot") return RatingMode::onehot;
    if (v == "scores" || v == "soft") return RatingMode::scores;
    throw EnsembleError("unknown rating mode '" + std::string(s) + "' (expected onehot or scores)");
}

std::string to_string(RatingMode mode) { return mode == RatingMode::onehot ? "onehot" : "scores"; }

RatingRow rate(const TrainedModel& model, std::span<const double> instance, RatingMode mode) {
    RatingRow scores = model.predict_scores(instance);
    if (mode == RatingMode::scores) return scores;
    RatingRow onehot(scores.size(), 0.0);
    onehot[argmax(scores)] = 1.0;
    return onehot;
}

std::vector<double> aggregate_scores(std::span<const RatingRow> ratings, std::span<const WeightVector> weights) {
    if (ratings.empty()) throw EnsembleError("aggregate needs at least one rating row");
    if (ratings.size() != weights.size()) throw EnsembleError("aggregate: ratings and weights differ in count");
    const std::size_t m = ratings.front().size();
    if (m == 0) throw EnsembleError("aggregate: empty rating row");
    std::vector<double> score(m, 0.0);
    for (std::size_t k = 0; k < ratings.size(); ++k) {
        if (ratings[k].size() != m || weights[k].size() != m) {
            throw EnsembleError("aggregate: member " + std::to_string(k) + " has the wrong length");
        }
        for (std::size_t j = 0; j < m; ++j) {
            const double x = ratings[k][j];
            const double w = weights[k][j];
            if (!std::isfinite(x) || !std::isfinite(w)) throw EnsembleError("aggregate: non-finite input");
            score[j] += x * w;
        }
    }
    return score;
}

std::size_t aggregate(std::span<const RatingRow> ratings, std::span<const WeightVector> weights) {
    return argmax(aggregate_scores(ratings, weights));
}

// ---------------------------------------------------------------------------

Committee::Committee(std::vector<CommitteeMember> members, std::size_t num_classes, RatingMode mode,
                     std::vector<std::string> class_names)
    : members_(std::move(members)), m_(num_classes), mode_(mode), class_names_(std::move(class_names)) {
    if (members_.empty()) throw EnsembleError("a committee needs at least one member");
    if (!class_names_.empty() && class_names_.size() != m_) throw EnsembleError("class name count differs from m");
    const auto d = members_.front().model ? members_.front().model->num_features() : 0;
    for (std::size_t k = 0; k < members_.size(); ++k) {
        const auto& mem = members_[k];
        const std::string who = "committee member " + std::to_string(k);
        if (!mem.model) throw EnsembleError(who + " has no model");
        if (mem.model->num_classes() != m_) throw EnsembleError(who + " has a different class count");
        if (mem.model->num_features() != d) throw EnsembleError(who + " has a different feature count");
        if (mem.weights.size() != m_) throw EnsembleError(who + " has a weight vector of the wrong length");
        for (double w : mem.weights.w) {
            if (!std::isfinite(w) || w < 0.0 || w > 3.0) throw EnsembleError(who + " has a weight outside [0, 3]");
        }
    }
}

std::vector<double> Committee::scores(std::span<const double> instance) const {
    std::vector<RatingRow> ratings;
    std::vector<WeightVector> weights;
    ratings.reserve(members_.size());
    weights.reserve(members_.size());
    for (const auto& mem : members_) {
        ratings.push_back(rate(*mem.model, instance, mode_));
        weights.push_back(mem.weights);
    }
    return aggregate_scores(ratings, weights);
}

int Committee::predict(std::span<const double> instance) const { return static_cast<int>(argmax(scores(instance))); }

std::vector<int> Committee::predict_all(const Dataset& ds, std::size_t jobs) const {
    std::vector<int> out(ds.size());
    parallel_for(ds.size(), jobs, [&](std::size_t i) { out[i] = predict(ds.row(i)); });
    return out;
}

int predict_committee(const Committee& c, std::span<const double> instance) { return c.predict(instance); }

// ---------------------------------------------------------------------------

std::string WeightProtocol::describe() const {
    switch (kind) {
        case Kind::validation: return "validation:" + text::format_double(fraction);
        case Kind::resubstitution: return "resubstitution";
        case Kind::external: return "external";
    }
    return "?";
}

namespace {

struct MemberOutcome {
    std::optional<CommitteeMember> member;
    std::string error;
};

void check_compatible(const Dataset& a, const Dataset& b, const std::string& what) {
    if (a.num_classes() != b.num_classes() || a.num_features() != b.num_features()) {
        throw EnsembleError(what + " has a different number of classes or features than the training set");
    }
}

}  // namespace

FitResult fit_committee(const Dataset& train, std::span<const LearnerSpec> specs, const WeightProtocol& protocol,
                        std::uint64_t seed, const FitOptions& options) {
    if (specs.empty()) throw EnsembleError("fit_committee needs at least one learner spec");

    std::optional<SplitPair> holdout;
    const Dataset* fit_set = &train;
    const Dataset* eval_set = &train;
    switch (protocol.kind) {
        case WeightProtocol::Kind::validation: {
            if (!(protocol.fraction > 0.0 && protocol.fraction < 1.0)) {
                throw EnsembleError("validation fraction must lie in (0, 1)");
            }
            try {
                const auto split_seed = SeedStream(seed).derive("weight-validation")();
                holdout = stratified_split(train, 1.0 - protocol.fraction, split_seed, options.rounding);
            } catch (const DataError& e) {
                throw EnsembleError(std::string("validation split failed: ") + e.what());
            }
            fit_set = &holdout->train;
            eval_set = &holdout->test;
            break;
        }
        case WeightProtocol::Kind::resubstitution: break;
        case WeightProtocol::Kind::external:
            if (!protocol.evaluation) throw EnsembleError("external weight protocol without an evaluation set");
            check_compatible(train, *protocol.evaluation, "the external evaluation set");
            eval_set = protocol.evaluation.get();
            break;
    }

    std::vector<MemberOutcome> outcomes(specs.size());
    parallel_for(specs.size(), options.jobs, [&](std::size_t k) {
        const auto& spec = specs[k];
        try {
            auto model = fit(spec, *fit_set);
            const auto cm = confusion_matrix(eval_set->labels(), model->predict_all(*eval_set), train.num_classes());
            auto pm = per_class_metrics(cm, options.accuracy_mode);
            auto weights = learner_weights(pm);
            if (protocol.kind == WeightProtocol::Kind::validation) model = fit(spec, train);
            outcomes[k].member = CommitteeMember{std::move(model), std::move(weights), std::move(pm)};
        } catch (const std::exception& e) {
            outcomes[k].error = e.what();
        }
    });

    std::vector<CommitteeMember> members;
    std::vector<MemberFailure> failures;
    for (std::size_t k = 0; k < specs.size(); ++k) {
        if (outcomes[k].member) {
            members.push_back(std::move(*outcomes[k].member));
            continue;
        }
        if (!options.drop_failed) throw LearnerError(specs[k].label() + ": " + outcomes[k].error);
        failures.push_back({specs[k].label(), outcomes[k].error});
    }
    if (members.empty()) throw EnsembleError("every committee member failed to train");
    return FitResult{Committee(std::move(members), train.num_classes(), options.rating_mode, train.class_names()),
                     std::move(failures)};
}

// ---------------------------------------------------------------------------
// Persistence
//
//   gdm-committee 1
//   members K / classes m / features d / rating_mode MODE
//   class_names m, then one name per line
//   per member: member k, kind, name, seed, hyperparameters, weights,
//   metrics (none | three lines), arrays N, then per array
//   "array NAME RANK DIMS..." followed by one line of values; "end" closes it.

namespace {

constexpr const char* kMagic = "gdm-committee";
constexpr int kVersion = 1;

void write_values(std::ostream& out, const std::string& key, std::span<const double> values) {
    out << key;
    for (double v : values) out << ' ' << text::format_double(v);
    out << '\n';
}

class Reader {
public:
    Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

    [[noreturn]] void fail(const std::string& why) const {
        throw EnsembleError(source_ + ":" + std::to_string(line_no_) + ": " + why);
    }

    std::string line() {
        std::string s;
        if (!std::getline(in_, s)) fail("unexpected end of committee file");
        ++line_no_;
        if (!s.empty() && s.back() == '\r') s.pop_back();
        return s;
    }

    /// Reads "key rest" and returns rest.
    std::string keyed(std::string_view key) {
        const auto s = line();
        const auto sp = s.find(' ');
        const auto head = s.substr(0, sp);
        if (head != key) fail("expected '" + std::string(key) + "', found '" + head + "'");
        return sp == std::string::npos ? std::string() : s.substr(sp + 1);
    }

    std::size_t size(std::string_view key) {
        const auto v = text::parse_int(keyed(key));
        if (!v || *v < 0) fail("'" + std::string(key) + "' needs a non-negative integer");
        return static_cast<std::size_t>(*v);
    }

    std::vector<double> values(std::string_view key, std::size_t expected) {
        std::vector<double> out;
        const auto rest = keyed(key);
        for (const auto& tok : text::split_whitespace(rest)) {
            const auto v = text::parse_double(tok);
            if (!v) fail("bad number '" + std::string(tok) + "'");
            out.push_back(*v);
        }
        if (out.size() != expected) {
            fail("'" + std::string(key) + "' has " + std::to_string(out.size()) + " values, expected " +
                 std::to_string(expected));
        }
        return out;
    }

private:
    std::istream& in_;
    std::string source_;
    std::size_t line_no_ = 0;
};

}  // namespace

void save_committee(const Committee& c, std::ostream& out) {
    const auto m = c.num_classes();
    out << kMagic << ' ' << kVersion << '\n';
    out << "members " << c.size() << '\n';
    out << "classes " << m << '\n';
    out << "features " << c.num_features() << '\n';
    out << "rating_mode " << to_string(c.rating_mode()) << '\n';
    out << "class_names " << c.class_names().size() << '\n';
    for (const auto& name : c.class_names()) out << name << '\n';
    for (std::size_t k = 0; k < c.size(); ++k) {
        const auto& mem = c.members()[k];
        const auto& spec = mem.model->spec();
        out << "member " << k << '\n';
        out << "kind " << to_string(spec.kind) << '\n';
        out << "name " << spec.name << '\n';
        out << "seed " << spec.seed << '\n';
        out << "hyperparameters " << spec.hyperparameters.to_string() << '\n';
        write_values(out, "weights", mem.weights.w);
        if (mem.metrics) {
            out << "metrics present\n";
            write_values(out, "precision", mem.metrics->precision);
            write_values(out, "recall", mem.metrics->recall);
            write_values(out, "accuracy", mem.metrics->accuracy);
        } else {
            out << "metrics none\n";
        }
        const auto params = mem.model->parameters();
        out << "arrays " << params.size() << '\n';
        for (const auto& a : params) {
            out << "array " << a.name << ' ' << a.shape.size();
            for (auto s : a.shape) out << ' ' << s;
            out << '\n';
            write_values(out, "values", a.values);
        }
        out << "end\n";
    }
    if (!out) throw EnsembleError("failed writing committee");
}

void save_committee(const Committee& c, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw EnsembleError("cannot write committee file " + path.string());
    save_committee(c, out);
}

Committee load_committee(std::istream& in, const std::string& source) {
    Reader r(in, source);
    const auto magic = r.line();
    if (magic != std::string(kMagic) + " " + std::to_string(kVersion)) {
        r.fail("not a version " + std::to_string(kVersion) + " committee file");
    }
    const auto k_count = r.size("members");
    const auto m = r.size("classes");
    const auto d = r.size("features");
    RatingMode mode{};
    try {
        mode = parse_rating_mode(r.keyed("rating_mode"));
    } catch (const EnsembleError& e) {
        r.fail(e.what());
    }
    std::vector<std::string> names(r.size("class_names"));
    for (auto& n : names) n = r.line();

    std::vector<CommitteeMember> members;
    for (std::size_t k = 0; k < k_count; ++k) {
        if (r.size("member") != k) r.fail("members out of order");
        try {
            LearnerSpec spec;
            spec.kind = parse_learner_kind(r.keyed("kind"));
            spec.name = r.keyed("name");
            const auto seed = r.keyed("seed");
            const auto [ptr, ec] = std::from_chars(seed.data(), seed.data() + seed.size(), spec.seed);
            if (ec != std::errc() || ptr != seed.data() + seed.size()) r.fail("bad seed '" + seed + "'");
            spec.hyperparameters = Hyperparameters::parse(spec.kind, r.keyed("hyperparameters"));

            CommitteeMember mem;
            mem.weights.w = r.values("weights", m);
            const auto has_metrics = r.keyed("metrics");
            if (has_metrics == "present") {
                PerClassMetrics pm;
                pm.precision = r.values("precision", m);
                pm.recall = r.values("recall", m);
                pm.accuracy = r.values("accuracy", m);
                mem.metrics = std::move(pm);
            } else if (has_metrics != "none") {
                r.fail("'metrics' must be present or none");
            }

            ParameterSet params(r.size("arrays"));
            for (auto& a : params) {
                const auto header = r.keyed("array");
                const auto head = text::split_whitespace(header);
                if (head.size() < 2) r.fail("array header needs a name and a rank");
                a.name = std::string(head[0]);
                const auto rank = text::parse_int(head[1]);
                if (!rank || *rank < 0 || static_cast<std::size_t>(*rank) + 2 != head.size()) r.fail("bad array rank");
                std::size_t total = 1;
                for (std::size_t i = 2; i < head.size(); ++i) {
                    const auto s = text::parse_int(head[i]);
                    if (!s || *s < 0) r.fail("bad array dimension");
                    a.shape.push_back(static_cast<std::size_t>(*s));
                    total *= static_cast<std::size_t>(*s);
                }
                a.values = r.values("values", total);
            }
            if (r.line() != "end") r.fail("expected 'end' after member " + std::to_string(k));
            mem.model = restore_model(spec, m, d, params);
            members.push_back(std::move(mem));
        } catch (const LearnerError& e) {
            r.fail(e.what());
        }
    }
    try {
        return Committee(std::move(members), m, mode, std::move(names));
    } catch (const EnsembleError& e) {
        r.fail(e.what());
    }
}

Committee load_committee(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw EnsembleError("cannot open committee file " + path.string());
    return load_committee(in, path.string());
}

}  // namespace gdm
