// gdm: command-line front end for the experiment harness.

#include "gdm/ensemble.hpp"
#include "gdm/harness.hpp"
#include "gdm/text.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

namespace {

std::filesystem::path default_manifest_dir() {
    if (const char* env = std::getenv("GDM_MANIFEST_DIR"); env && *env) return env;
    return GDM_DEFAULT_MANIFEST_DIR;
}

const std::vector<std::string> kDefaultDatasets = {"cmc", "glass", "seeds", "sonar", "wine"};

struct RunArgs {
    std::string config;
    std::vector<std::string> datasets;
    std::string seeds;
    std::optional<double> split;
    std::string learners;
    std::vector<std::string> params;
    std::string weight_protocol;
    std::string rating;
    std::string accuracy_mode;
    std::string split_rounding;
    bool plain_split = false;
    bool paper_protocol = false;
    std::optional<std::size_t> jobs;
    std::string out;
    std::string format;
    bool save_committees = false;
    bool quiet = false;
    std::string manifest_dir;
};

gdm::LearnerSpec& find_or_add(std::vector<gdm::LearnerSpec>& roster, gdm::LearnerKind kind) {
    for (auto& s : roster) {
        if (s.kind == kind) return s;
    }
    throw gdm::ConfigError("--param names " + gdm::to_string(kind) + ", which is not in the learner roster");
}

int run_command(const RunArgs& a) {
    const std::filesystem::path manifest_dir = a.manifest_dir.empty() ? default_manifest_dir() : std::filesystem::path(a.manifest_dir);
    gdm::ExperimentConfig cfg;
    if (!a.config.empty()) {
        cfg = gdm::load_config(a.config, manifest_dir);
    } else {
        cfg.learners = gdm::default_roster();
    }
    const auto config_learners = cfg.learners;

    if (a.paper_protocol) gdm::apply_paper_protocol(cfg);
    if (!a.datasets.empty() || cfg.datasets.empty()) {
        cfg.datasets.clear();
        for (const auto& d : a.datasets.empty() ? kDefaultDatasets : a.datasets) {
            for (const auto& name : gdm::text::split(d, ',')) {
                if (!gdm::text::trim(name).empty()) {
                    cfg.datasets.push_back(gdm::resolve_dataset(gdm::text::trim(name), manifest_dir));
                }
            }
        }
    }
    if (!a.seeds.empty()) cfg.seeds = gdm::parse_seed_list(a.seeds);
    if (a.split) cfg.split = *a.split;
    if (!a.learners.empty()) {
        cfg.learners.clear();
        for (const auto& name : gdm::text::split(a.learners, ',')) {
            if (gdm::text::trim(name).empty()) continue;
            const auto kind = gdm::parse_learner_kind(name);
            auto spec = gdm::LearnerSpec::make(kind);
            for (const auto& s : config_learners) {
                if (s.kind == kind) {
                    spec = s;
                    break;
                }
            }
            cfg.learners.push_back(std::move(spec));
        }
    }
    for (const auto& p : a.params) {
        const auto dot = p.find('.');
        const auto eq = p.find('=');
        if (dot == std::string::npos || eq == std::string::npos || eq < dot) {
            throw gdm::ConfigError("--param expects KIND.KEY=VALUE, got '" + p + "'");
        }
        auto& spec = find_or_add(cfg.learners, gdm::parse_learner_kind(p.substr(0, dot)));
        spec.hyperparameters.set(p.substr(dot + 1, eq - dot - 1), p.substr(eq + 1));
    }
    if (!a.weight_protocol.empty()) cfg.protocol = gdm::ProtocolChoice::parse(a.weight_protocol);
    if (!a.rating.empty()) cfg.rating = gdm::parse_rating_mode(a.rating);
    if (!a.accuracy_mode.empty()) cfg.accuracy_mode = gdm::parse_accuracy_mode(a.accuracy_mode);
    if (!a.split_rounding.empty()) cfg.rounding = gdm::parse_split_rounding(a.split_rounding);
    if (a.plain_split) cfg.stratified = false;
    if (a.jobs) cfg.jobs = *a.jobs;
    if (!a.out.empty()) cfg.out_dir = a.out;
    if (!a.format.empty()) cfg.format = gdm::parse_report_format(a.format);
    if (a.save_committees) cfg.save_committees = true;
    cfg.validate();

    if (cfg.protocol.leaks_test_labels()) {
        std::cerr << "warning: weight protocol external-test computes weights on the test set (test labels leak)\n";
    }
    const auto progress = [&](const gdm::CellResult& c) {
        if (a.quiet) return;
        std::cerr << c.dataset << " seed " << c.seed << ": ";
        if (!c.ok()) {
            std::cerr << "FAILED (" << c.error << ")\n";
        } else {
            std::cerr << "ensemble " << gdm::text::format_fixed(100.0 * c.ensemble_accuracy.value_or(0.0), 2) << "%\n";
        }
        for (const auto& w : c.warnings) std::cerr << "  warning: " << w << '\n';
    };
    const auto report = gdm::run_experiment(cfg, progress);
    std::cout << gdm::format_report(report, cfg.format);
    if (!cfg.out_dir.empty()) gdm::write_report_files(report, cfg.out_dir, cfg.save_committees);
    return report.all_completed() ? 0 : 1;
}

int fetch_command(const std::vector<std::string>& datasets, bool checksums_only, const std::string& manifest_dir_arg) {
    const std::filesystem::path manifest_dir = manifest_dir_arg.empty() ? default_manifest_dir() : std::filesystem::path(manifest_dir_arg);
    bool ok = true;
    for (const auto& name : datasets.empty() ? kDefaultDatasets : datasets) {
        const auto outcome = gdm::fetch_dataset(gdm::resolve_dataset(name, manifest_dir), checksums_only);
        std::cout << (outcome.ok ? "ok     " : "FAILED ") << outcome.dataset << ": " << outcome.message << '\n';
        ok = ok && outcome.ok;
    }
    return ok ? 0 : 1;
}

int inspect_command(const std::string& path) {
    const auto committee = gdm::load_committee(std::filesystem::path(path));
    const auto m = committee.num_classes();
    std::vector<std::string> names = committee.class_names();
    if (names.empty()) {
        for (std::size_t c = 0; c < m; ++c) names.push_back(std::to_string(c));
    }
    std::cout << "committee: " << committee.size() << " members, " << m << " classes, " << committee.num_features()
              << " features, rating " << gdm::to_string(committee.rating_mode()) << "\n\n";
    std::cout << "| Learner | Indicator |";
    for (const auto& n : names) std::cout << " Class " << n << " |";
    std::cout << "\n|---|---|";
    for (std::size_t c = 0; c < m; ++c) std::cout << "---:|";
    std::cout << '\n';
    const auto row = [&](const std::string& learner, const std::string& label, const std::vector<double>& v,
                         bool as_percent) {
        std::cout << "| " << learner << " | " << label << " |";
        for (double x : v) std::cout << ' ' << (as_percent ? gdm::text::format_fixed(100.0 * x, 2) : gdm::text::format_fixed(x, 4)) << " |";
        std::cout << '\n';
    };
    for (const auto& mem : committee.members()) {
        const auto label = mem.model->spec().label();
        if (mem.metrics) {
            row(label, "P (%)", mem.metrics->precision, true);
            row(label, "R (%)", mem.metrics->recall, true);
            row(label, "A (%)", mem.metrics->accuracy, true);
        }
        row(label, "W", mem.weights.w, false);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Group-decision ensemble of base classifiers: experiments, dataset checks, committee inspection"};
    app.require_subcommand(1);

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Split, train, weight and evaluate on each dataset and seed");
    run_cmd->add_option("--config", run.config, "Experiment config file");
    run_cmd->add_option("--dataset", run.datasets, "Dataset names or manifest paths (default: cmc glass seeds sonar wine)");
    run_cmd->add_option("--seeds", run.seeds, "Seed list such as 0-9 or 1,4,7 (default 0-9)");
    run_cmd->add_option("--split", run.split, "Training fraction (default 0.8)");
    run_cmd->add_option("--learners", run.learners, "Comma list of learners (default knn,logreg,random_forest,elm)");
    run_cmd->add_option("--param", run.params, "Hyperparameter override KIND.KEY=VALUE, repeatable");
    run_cmd->add_option("--weight-protocol", run.weight_protocol,
                        "validation:F | resubstitution | external-test (default validation:0.25)");
    run_cmd->add_option("--rating", run.rating, "onehot | scores (default scores)");
    run_cmd->add_option("--accuracy-mode", run.accuracy_mode, "overall | ovr (default overall)");
    run_cmd->add_option("--split-rounding", run.split_rounding, "half-up | down | up (default half-up)");
    run_cmd->add_flag("--plain-split", run.plain_split, "Unstratified random split");
    run_cmd->add_flag("--paper-protocol", run.paper_protocol,
                      "One seed, test-set weights (leaky), one-hot ratings, six-learner roster");
    run_cmd->add_option("--jobs", run.jobs, "Worker threads (0 = all cores)");
    run_cmd->add_option("--out", run.out, "Directory for accuracy.csv, summary.md, report.json, metrics.csv");
    run_cmd->add_option("--format", run.format, "Report printed to stdout: csv | markdown | json (default markdown)");
    run_cmd->add_flag("--save-committees", run.save_committees, "Also write every fitted committee under OUT/committees");
    run_cmd->add_flag("--quiet", run.quiet, "No per-cell progress on stderr");
    run_cmd->add_option("--manifest-dir", run.manifest_dir, "Where bare dataset names are looked up");

    std::vector<std::string> fetch_datasets;
    bool checksums = false;
    std::string fetch_manifest_dir;
    auto* fetch_cmd = app.add_subcommand("fetch", "Download missing datasets and verify checksums");
    fetch_cmd->add_flag("--checksums", checksums, "Only verify local files, never download");
    fetch_cmd->add_option("--dataset", fetch_datasets, "Dataset names (default: all five)");
    fetch_cmd->add_option("--manifest-dir", fetch_manifest_dir, "Manifest directory");

    std::string committee_path;
    auto* inspect_cmd = app.add_subcommand("inspect-committee", "Print a saved committee's indicators and weights");
    inspect_cmd->add_option("path", committee_path, "Committee file")->required();

    auto* learners_cmd = app.add_subcommand("learners", "List learners and their hyperparameters");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*run_cmd) return run_command(run);
        if (*fetch_cmd) return fetch_command(fetch_datasets, checksums, fetch_manifest_dir);
        if (*inspect_cmd) return inspect_command(committee_path);
        if (*learners_cmd) {
            std::cout << gdm::learner_help();
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
