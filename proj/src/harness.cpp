#include "gdm/harness.hpp"

#include "gdm/parallel.hpp"
#include "gdm/random.hpp"
#include "gdm/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>

namespace gdm {

ReportFormat parse_report_format(std::string_view s) {
    const auto v = text::to_lower(text::trim(s));
    if (v == "csv") return ReportFormat::csv;
    if (v == "markdown" || v == "md") return ReportFormat::markdown;
    if (v == "json") return ReportFormat::json;
    throw ConfigError("unknown report format '" + std::string(s) + "' (expected csv, markdown or json)");
}

std::string to_string(ReportFormat f) {
    switch (f) {
        case ReportFormat::csv: return "csv";
        case ReportFormat::markdown: return "markdown";
        case ReportFormat::json: return "json";
    }
    return "?";
}

ProtocolChoice ProtocolChoice::parse(std::string_view s) {
    const auto v = text::to_lower(text::trim(s));
    if (v == "resubstitution") return {WeightProtocol::Kind::resubstitution, 0.0};
    if (v == "external-test" || v == "external") return {WeightProtocol::Kind::external, 0.0};
    if (v == "validation") return {WeightProtocol::Kind::validation, 0.25};
    if (v.rfind("validation:", 0) == 0) {
        const auto f = text::parse_double(std::string_view(v).substr(11));
        if (!f || !(*f > 0.0 && *f < 1.0)) throw ConfigError("validation fraction must lie in (0, 1), got '" + v + "'");
        return {WeightProtocol::Kind::validation, *f};
    }
    throw ConfigError("unknown weight protocol '" + std::string(s) +
                      "' (expected validation:F, resubstitution or external-test)");
}

std::string ProtocolChoice::to_string() const {
    switch (kind) {
        case WeightProtocol::Kind::validation: return "validation:" + text::format_double(fraction);
        case WeightProtocol::Kind::resubstitution: return "resubstitution";
        case WeightProtocol::Kind::external: return "external-test";
    }
    return "?";
}

std::vector<std::uint64_t> parse_seed_list(std::string_view s) {
    std::vector<std::uint64_t> out;
    std::set<std::uint64_t> seen;
    const auto parse_one = [&](std::string_view tok) {
        const auto v = text::parse_int(text::trim(tok));
        if (!v || *v < 0) throw ConfigError("bad seed '" + std::string(tok) + "'");
        return static_cast<std::uint64_t>(*v);
    };
    for (const auto& part : text::split(s, ',')) {
        const auto item = text::trim(part);
        if (item.empty()) continue;
        const auto dash = item.find('-', 1);
        std::uint64_t lo = 0;
        std::uint64_t hi = 0;
        if (dash == std::string_view::npos) {
            lo = hi = parse_one(item);
        } else {
            lo = parse_one(item.substr(0, dash));
            hi = parse_one(item.substr(dash + 1));
            if (hi < lo) throw ConfigError("descending seed range '" + std::string(item) + "'");
            if (hi - lo > 100000) throw ConfigError("seed range '" + std::string(item) + "' is too long");
        }
        for (auto v = lo; v <= hi; ++v) {
            if (!seen.insert(v).second) throw ConfigError("seed " + std::to_string(v) + " listed twice");
            out.push_back(v);
        }
    }
    if (out.empty()) throw ConfigError("empty seed list");
    return out;
}

void ExperimentConfig::validate() const {
    if (datasets.empty()) throw ConfigError("no datasets configured");
    if (learners.empty()) throw ConfigError("no learners configured");
    if (seeds.empty()) throw ConfigError("no seeds configured");
    if (!(split > 0.0 && split < 1.0)) throw ConfigError("split fraction must lie in (0, 1)");
    if (protocol.kind == WeightProtocol::Kind::validation && !(protocol.fraction > 0.0 && protocol.fraction < 1.0)) {
        throw ConfigError("validation fraction must lie in (0, 1)");
    }
    std::set<std::string> labels;
    for (const auto& l : learners) {
        if (l.label().find_first_of(",\n\"") != std::string::npos) {
            throw ConfigError("learner label '" + l.label() + "' may not contain commas or quotes");
        }
        if (!labels.insert(l.label()).second) {
            throw ConfigError("learner label '" + l.label() + "' used twice; give one of them a distinct name");
        }
    }
    std::set<std::string> names;
    for (const auto& d : datasets) {
        if (!names.insert(d.name).second) throw ConfigError("dataset '" + d.name + "' listed twice");
    }
}

std::vector<LearnerSpec> default_roster() {
    return {LearnerSpec::make(LearnerKind::knn), LearnerSpec::make(LearnerKind::logreg),
            LearnerSpec::make(LearnerKind::random_forest), LearnerSpec::make(LearnerKind::elm)};
}

std::vector<LearnerSpec> paper_roster() {
    return {LearnerSpec::make(LearnerKind::linear_svm), LearnerSpec::make(LearnerKind::mlp_bp),
            LearnerSpec::make(LearnerKind::logreg),     LearnerSpec::make(LearnerKind::knn),
            LearnerSpec::make(LearnerKind::random_forest), LearnerSpec::make(LearnerKind::elm)};
}

void apply_paper_protocol(ExperimentConfig& cfg) {
    cfg.paper_protocol = true;
    cfg.seeds = {cfg.seeds.empty() ? 0 : cfg.seeds.front()};
    cfg.protocol = {WeightProtocol::Kind::external, 0.0};
    cfg.rating = RatingMode::onehot;
    cfg.learners = paper_roster();
}

DatasetManifest resolve_dataset(std::string_view name_or_path, const std::filesystem::path& manifest_dir) {
    const std::filesystem::path p{std::string(name_or_path)};
    std::error_code ec;
    if (std::filesystem::is_regular_file(p, ec)) return load_manifest(p);
    const auto candidate = manifest_dir / (std::string(name_or_path) + ".manifest");
    if (std::filesystem::is_regular_file(candidate, ec)) return load_manifest(candidate);
    throw ConfigError("unknown dataset '" + std::string(name_or_path) + "': no manifest at " + candidate.string());
}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

std::filesystem::path resolve_path(const std::filesystem::path& base, std::string_view value) {
    std::filesystem::path p{std::string(value)};
    return p.is_absolute() ? p : base / p;
}

bool parse_flag(std::string_view key, std::string_view value) {
    bool b = false;
    if (!text::parse_bool(value, b)) throw ConfigError("'" + std::string(key) + "' expects true or false");
    return b;
}

}  // namespace

ExperimentConfig parse_config(std::string_view content, const std::filesystem::path& base_dir,
                              const std::filesystem::path& default_manifest_dir, const std::string& source) {
    ExperimentConfig cfg;
    std::filesystem::path manifest_dir = default_manifest_dir;
    struct PendingDataset {
        std::string name;
        std::string path;  // empty: look up by name
        std::size_t line;
    };
    std::vector<PendingDataset> datasets;
    std::vector<LearnerSpec> learners;
    bool paper = false;

    enum class Section { none, experiment, datasets, learner } section = Section::none;
    std::size_t line_no = 0;
    std::istringstream in{std::string(content)};
    std::string raw;
    const auto fail = [&](const std::string& why) -> void {
        throw ConfigError(source + ":" + std::to_string(line_no) + ": " + why);
    };
    while (std::getline(in, raw)) {
        ++line_no;
        auto line = raw;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto t = text::trim(line);
        if (t.empty()) continue;

        if (t.front() == '[') {
            if (t.back() != ']') fail("unterminated section header");
            const auto words = text::split_whitespace(t.substr(1, t.size() - 2));
            if (words.empty()) fail("empty section header");
            const auto head = text::to_lower(words[0]);
            if (head == "experiment" && words.size() == 1) {
                section = Section::experiment;
            } else if (head == "datasets" && words.size() == 1) {
                section = Section::datasets;
            } else if (head == "learner" && words.size() == 2) {
                section = Section::learner;
                try {
                    learners.push_back(LearnerSpec::make(parse_learner_kind(words[1])));
                } catch (const LearnerError& e) {
                    fail(e.what());
                }
            } else {
                fail("unknown section '" + std::string(t) + "'");
            }
            continue;
        }

        const auto eq = t.find('=');
        const auto key = text::to_lower(text::trim(t.substr(0, eq)));
        const auto value = eq == std::string_view::npos ? std::string_view{} : text::trim(t.substr(eq + 1));

        try {
            switch (section) {
                case Section::none: fail("setting outside a section"); break;
                case Section::datasets:
                    datasets.push_back({key, std::string(value), line_no});
                    break;
                case Section::learner: {
                    if (eq == std::string_view::npos) fail("expected key = value");
                    auto& spec = learners.back();
                    if (key == "name") {
                        spec.name = std::string(value);
                    } else if (key == "seed") {
                        const auto v = text::parse_int(value);
                        if (!v || *v < 0) fail("seed must be a non-negative integer");
                        spec.seed = static_cast<std::uint64_t>(*v);
                    } else {
                        spec.hyperparameters.set(key, value);
                    }
                    break;
                }
                case Section::experiment: {
                    if (eq == std::string_view::npos) fail("expected key = value");
                    if (key == "split") {
                        const auto v = text::parse_double(value);
                        if (!v) fail("split must be a number");
                        cfg.split = *v;
                    } else if (key == "seeds") {
                        cfg.seeds = parse_seed_list(value);
                    } else if (key == "weight_protocol") {
                        cfg.protocol = ProtocolChoice::parse(value);
                    } else if (key == "rating") {
                        cfg.rating = parse_rating_mode(value);
                    } else if (key == "accuracy_mode") {
                        cfg.accuracy_mode = parse_accuracy_mode(value);
                    } else if (key == "split_rounding") {
                        cfg.rounding = parse_split_rounding(value);
                    } else if (key == "stratified") {
                        cfg.stratified = parse_flag(key, value);
                    } else if (key == "jobs") {
                        const auto v = text::parse_int(value);
                        if (!v || *v < 0) fail("jobs must be a non-negative integer");
                        cfg.jobs = static_cast<std::size_t>(*v);
                    } else if (key == "out") {
                        cfg.out_dir = resolve_path(base_dir, value);
                    } else if (key == "format") {
                        cfg.format = parse_report_format(value);
                    } else if (key == "save_committees") {
                        cfg.save_committees = parse_flag(key, value);
                    } else if (key == "manifest_dir") {
                        manifest_dir = resolve_path(base_dir, value);
                    } else if (key == "paper_protocol") {
                        paper = parse_flag(key, value);
                    } else {
                        fail("unknown experiment setting '" + key + "'");
                    }
                    break;
                }
            }
        } catch (const ConfigError& e) {
            if (std::string_view(e.what()).starts_with(source + ":")) throw;
            fail(e.what());
        } catch (const std::exception& e) {
            fail(e.what());
        }
    }

    if (paper) {
        apply_paper_protocol(cfg);
        if (!learners.empty()) cfg.learners = learners;
    } else if (!learners.empty()) {
        cfg.learners = learners;
    } else {
        cfg.learners = default_roster();
    }
    for (const auto& d : datasets) {
        line_no = d.line;
        try {
            auto m = d.path.empty() ? resolve_dataset(d.name, manifest_dir) : load_manifest(resolve_path(base_dir, d.path));
            if (!d.path.empty()) m.name = d.name;
            cfg.datasets.push_back(std::move(m));
        } catch (const std::exception& e) {
            fail(e.what());
        }
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, const std::filesystem::path& default_manifest_dir) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path.parent_path(), default_manifest_dir, path.string());
}

// ---------------------------------------------------------------------------
// Running

namespace {

std::uint64_t member_seed(std::uint64_t cell_seed, const LearnerSpec& spec) {
    return SeedStream(cell_seed).derive("member").derive(spec.label()).derive(spec.seed)();
}

CellResult run_cell(const ExperimentConfig& cfg, const DatasetManifest& manifest, const Dataset& ds,
                    std::uint64_t seed) {
    CellResult cell;
    cell.dataset = manifest.name;
    cell.seed = seed;
    cell.class_names = ds.class_names();
    try {
        const auto split = cfg.stratified ? stratified_split(ds, cfg.split, seed, cfg.rounding)
                                          : random_split(ds, cfg.split, seed, cfg.rounding);
        const auto scaled = standardize(split.train, split.test);
        const Dataset& train = scaled.train;
        const Dataset& test = scaled.test;
        cell.n_train = train.size();
        cell.n_test = test.size();
        cell.truth = test.labels();

        std::vector<LearnerSpec> specs = cfg.learners;
        for (auto& s : specs) s.seed = member_seed(seed, s);

        WeightProtocol protocol;
        switch (cfg.protocol.kind) {
            case WeightProtocol::Kind::validation: protocol = WeightProtocol::validation(cfg.protocol.fraction); break;
            case WeightProtocol::Kind::resubstitution: protocol = WeightProtocol::resubstitution(); break;
            case WeightProtocol::Kind::external:
                protocol = WeightProtocol::external(std::make_shared<const Dataset>(test));
                break;
        }
        FitOptions options;
        options.rating_mode = cfg.rating;
        options.accuracy_mode = cfg.accuracy_mode;
        options.rounding = cfg.rounding;
        options.drop_failed = true;
        options.jobs = 1;

        auto fitted = fit_committee(train, specs, protocol, seed, options);
        std::set<std::string> failed;
        for (const auto& f : fitted.failures) {
            failed.insert(f.learner);
            cell.warnings.push_back("learner " + f.learner + " dropped: " + f.message);
        }

        std::size_t member = 0;
        for (const auto& spec : cfg.learners) {
            LearnerResult lr;
            lr.learner = spec.label();
            if (!failed.count(lr.learner)) {
                const auto& mem = fitted.committee.members()[member++];
                lr.predictions = mem.model->predict_all(test);
                lr.accuracy = accuracy(confusion_matrix(cell.truth, lr.predictions, ds.num_classes()));
                lr.metrics = mem.metrics;
                lr.weights = mem.weights;
            }
            cell.learners.push_back(std::move(lr));
        }
        cell.ensemble_predictions = fitted.committee.predict_all(test);
        cell.ensemble_accuracy = accuracy(confusion_matrix(cell.truth, cell.ensemble_predictions, ds.num_classes()));
        cell.committee = std::move(fitted.committee);
    } catch (const std::exception& e) {
        cell.error = e.what();
        cell.learners.clear();
        for (const auto& spec : cfg.learners) cell.learners.push_back({spec.label(), {}, {}, {}, {}});
    }
    return cell;
}

double sample_stddev(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

bool ExperimentReport::all_completed() const {
    return std::all_of(cells.begin(), cells.end(), [](const CellResult& c) { return c.ok(); }) &&
           std::none_of(summaries.begin(), summaries.end(), [](const DatasetSummary& s) { return s.failed; });
}

ExperimentReport run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress) {
    cfg.validate();
    ExperimentReport report;
    for (const auto& l : cfg.learners) report.learner_labels.push_back(l.label());
    report.protocol = cfg.protocol.to_string();
    report.rating = to_string(cfg.rating);
    report.leaks_test_labels = cfg.protocol.leaks_test_labels();

    std::vector<std::optional<Dataset>> loaded(cfg.datasets.size());
    std::vector<std::string> load_errors(cfg.datasets.size());
    for (std::size_t i = 0; i < cfg.datasets.size(); ++i) {
        try {
            loaded[i] = load_dataset(cfg.datasets[i]);
        } catch (const std::exception& e) {
            load_errors[i] = e.what();
        }
    }

    const std::size_t n_seeds = cfg.seeds.size();
    report.cells.resize(cfg.datasets.size() * n_seeds);
    std::mutex progress_mutex;
    parallel_for(report.cells.size(), cfg.jobs, [&](std::size_t idx) {
        const std::size_t di = idx / n_seeds;
        const auto seed = cfg.seeds[idx % n_seeds];
        CellResult cell;
        if (loaded[di]) {
            cell = run_cell(cfg, cfg.datasets[di], *loaded[di], seed);
        } else {
            cell.dataset = cfg.datasets[di].name;
            cell.seed = seed;
            cell.error = "dataset load failed: " + load_errors[di];
            for (const auto& spec : cfg.learners) cell.learners.push_back({spec.label(), {}, {}, {}, {}});
        }
        if (progress) {
            std::lock_guard lock(progress_mutex);
            progress(cell);
        }
        report.cells[idx] = std::move(cell);
    });
    report.summaries = summarize(report.cells, report.learner_labels);
    return report;
}

std::vector<DatasetSummary> summarize(const std::vector<CellResult>& cells,
                                      const std::vector<std::string>& learner_labels) {
    std::vector<DatasetSummary> out;
    std::map<std::string, std::size_t> index;
    std::vector<std::vector<std::vector<double>>> values;  // dataset -> column -> per-seed
    const std::size_t n_cols = learner_labels.size() + 1;
    for (const auto& cell : cells) {
        auto [it, inserted] = index.try_emplace(cell.dataset, out.size());
        if (inserted) {
            DatasetSummary s;
            s.dataset = cell.dataset;
            for (const auto& l : learner_labels) s.columns.push_back({l});
            s.columns.push_back({"ensemble"});
            out.push_back(std::move(s));
            values.emplace_back(n_cols);
        }
        auto& s = out[it->second];
        if (!cell.ok()) {
            s.failed = true;
            continue;
        }
        for (std::size_t c = 0; c < learner_labels.size() && c < cell.learners.size(); ++c) {
            if (cell.learners[c].accuracy) values[it->second][c].push_back(*cell.learners[c].accuracy);
        }
        if (cell.ensemble_accuracy) values[it->second].back().push_back(*cell.ensemble_accuracy);
    }
    for (std::size_t d = 0; d < out.size(); ++d) {
        auto& cols = out[d].columns;
        double hi = -1.0;
        double lo = 2.0;
        for (std::size_t c = 0; c < n_cols; ++c) {
            const auto& v = values[d][c];
            cols[c].count = v.size();
            if (v.empty()) continue;
            double sum = 0.0;
            for (double x : v) sum += x;
            cols[c].mean = sum / static_cast<double>(v.size());
            cols[c].stddev = sample_stddev(v, cols[c].mean);
            hi = std::max(hi, cols[c].mean);
            lo = std::min(lo, cols[c].mean);
        }
        for (auto& col : cols) {
            if (col.count == 0) continue;
            col.best = col.mean == hi;
            col.worst = col.mean == lo;
        }
        if (std::all_of(cols.begin(), cols.end(), [](const ColumnSummary& c) { return c.count == 0; })) {
            out[d].failed = true;
        }
    }
    return out;
}

}  // namespace gdm
