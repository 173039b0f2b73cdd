#include "gdm/harness.hpp"
#include "gdm/text.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace gdm {

namespace {

constexpr const char* kCsvHeader = "dataset,seed,learner,accuracy,n_test";

std::string percent(double v) { return text::format_fixed(100.0 * v, 2); }

std::string format_csv(const ExperimentReport& r) {
    std::ostringstream out;
    out << kCsvHeader << '\n';
    for (const auto& rec : accuracy_records(r)) {
        out << rec.dataset << ',' << rec.seed << ',' << rec.learner << ',' << text::format_double(rec.accuracy) << ','
            << rec.n_test << '\n';
    }
    return out.str();
}

std::string format_markdown(const ExperimentReport& r) {
    std::ostringstream out;
    std::size_t seeds = 0;
    if (!r.summaries.empty()) {
        for (const auto& c : r.cells) seeds += c.dataset == r.summaries.front().dataset ? 1 : 0;
    }
    out << "Test accuracy (%), mean ± sample std over " << seeds << (seeds == 1 ? " seed" : " seeds")
        << ". Weight protocol: " << r.protocol << "; rating: " << r.rating << ".\n";
    if (r.leaks_test_labels) out << "\n**Warning:** weights were computed on the test set, so test labels leak into the ensemble.\n";
    out << "\n| Dataset |";
    for (const auto& l : r.learner_labels) out << ' ' << l << " |";
    out << " Ensemble |\n|---|";
    for (std::size_t i = 0; i <= r.learner_labels.size(); ++i) out << "---:|";
    out << '\n';
    for (const auto& s : r.summaries) {
        out << "| " << s.dataset << (s.failed ? " (incomplete)" : "") << " |";
        for (const auto& c : s.columns) {
            if (c.count == 0) {
                out << " n/a |";
                continue;
            }
            std::string cell = percent(c.mean);
            if (c.count > 1) cell += " ± " + percent(c.stddev);
            out << ' ' << (c.best ? "**" + cell + "**" : cell) << " |";
        }
        out << '\n';
    }
    bool any_notes = false;
    for (const auto& cell : r.cells) {
        for (const auto& msg : cell.warnings) {
            if (!any_notes) out << "\nNotes:\n\n";
            any_notes = true;
            out << "- " << cell.dataset << " seed " << cell.seed << ": " << msg << '\n';
        }
        if (!cell.ok()) {
            if (!any_notes) out << "\nNotes:\n\n";
            any_notes = true;
            out << "- " << cell.dataset << " seed " << cell.seed << " failed: " << cell.error << '\n';
        }
    }
    return out.str();
}

nlohmann::ordered_json metrics_json(const PerClassMetrics& pm) {
    return {{"precision", pm.precision}, {"recall", pm.recall}, {"accuracy", pm.accuracy}};
}

std::string format_json(const ExperimentReport& r) {
    using nlohmann::ordered_json;
    ordered_json root;
    root["protocol"] = r.protocol;
    root["rating"] = r.rating;
    root["leaks_test_labels"] = r.leaks_test_labels;
    root["learners"] = r.learner_labels;
    root["cells"] = ordered_json::array();
    for (const auto& c : r.cells) {
        ordered_json cell;
        cell["dataset"] = c.dataset;
        cell["seed"] = c.seed;
        cell["ok"] = c.ok();
        if (!c.ok()) cell["error"] = c.error;
        cell["n_train"] = c.n_train;
        cell["n_test"] = c.n_test;
        cell["classes"] = c.class_names;
        cell["ensemble_accuracy"] = c.ensemble_accuracy ? ordered_json(*c.ensemble_accuracy) : ordered_json(nullptr);
        cell["learners"] = ordered_json::array();
        for (const auto& l : c.learners) {
            ordered_json lj;
            lj["learner"] = l.learner;
            lj["accuracy"] = l.accuracy ? ordered_json(*l.accuracy) : ordered_json(nullptr);
            if (l.metrics) lj["indicators"] = metrics_json(*l.metrics);
            if (l.weights) lj["weights"] = l.weights->w;
            cell["learners"].push_back(std::move(lj));
        }
        cell["warnings"] = c.warnings;
        root["cells"].push_back(std::move(cell));
    }
    root["summaries"] = ordered_json::array();
    for (const auto& s : r.summaries) {
        ordered_json sj;
        sj["dataset"] = s.dataset;
        sj["failed"] = s.failed;
        sj["columns"] = ordered_json::array();
        for (const auto& c : s.columns) {
            sj["columns"].push_back({{"column", c.column},
                                     {"count", c.count},
                                     {"mean", c.mean},
                                     {"stddev", c.stddev},
                                     {"best", c.best},
                                     {"worst", c.worst}});
        }
        root["summaries"].push_back(std::move(sj));
    }
    return root.dump(2) + "\n";
}

void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << content;
    if (!out) throw ConfigError("failed writing " + path.string());
}

}  // namespace

std::string format_report(const ExperimentReport& r, ReportFormat fmt) {
    switch (fmt) {
        case ReportFormat::csv: return format_csv(r);
        case ReportFormat::markdown: return format_markdown(r);
        case ReportFormat::json: return format_json(r);
    }
    return {};
}

std::string format_metrics_csv(const ExperimentReport& r) {
    std::ostringstream out;
    out << "dataset,seed,learner,class,precision,recall,accuracy,weight\n";
    for (const auto& c : r.cells) {
        for (const auto& l : c.learners) {
            if (!l.metrics || !l.weights) continue;
            for (const auto& rec : metrics_records(l.learner, c.class_names, *l.metrics, *l.weights)) {
                out << c.dataset << ',' << c.seed << ',' << rec.learner << ',' << rec.class_name << ','
                    << text::format_double(rec.precision) << ',' << text::format_double(rec.recall) << ','
                    << text::format_double(rec.accuracy) << ',' << text::format_double(rec.weight) << '\n';
            }
        }
    }
    return out.str();
}

std::vector<AccuracyRecord> accuracy_records(const ExperimentReport& r) {
    std::vector<AccuracyRecord> out;
    for (const auto& c : r.cells) {
        if (!c.ok()) continue;
        for (const auto& l : c.learners) {
            if (l.accuracy) out.push_back({c.dataset, c.seed, l.learner, *l.accuracy, c.n_test});
        }
        if (c.ensemble_accuracy) out.push_back({c.dataset, c.seed, "ensemble", *c.ensemble_accuracy, c.n_test});
    }
    return out;
}

std::vector<AccuracyRecord> parse_report_csv(std::string_view content) {
    std::vector<AccuracyRecord> out;
    std::istringstream in{std::string(content)};
    std::string line;
    std::size_t line_no = 0;
    const auto fail = [&](const std::string& why) {
        throw ConfigError("report csv line " + std::to_string(line_no) + ": " + why);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1) {
            if (line != kCsvHeader) fail("unexpected header '" + line + "'");
            continue;
        }
        if (line.empty()) continue;
        const auto f = text::split(line, ',');
        if (f.size() != 5) fail("expected 5 fields");
        const auto seed = text::parse_int(f[1]);
        const auto acc = text::parse_double(f[3]);
        const auto n = text::parse_int(f[4]);
        if (!seed || *seed < 0 || !acc || !n || *n < 0) fail("bad numeric field");
        out.push_back({std::string(f[0]), static_cast<std::uint64_t>(*seed), std::string(f[2]), *acc,
                       static_cast<std::size_t>(*n)});
    }
    if (line_no == 0) fail("empty report");
    return out;
}

void write_report_files(const ExperimentReport& r, const std::filesystem::path& dir, bool save_committees) {
    std::filesystem::create_directories(dir);
    write_text(dir / "accuracy.csv", format_report(r, ReportFormat::csv));
    write_text(dir / "summary.md", format_report(r, ReportFormat::markdown));
    write_text(dir / "report.json", format_report(r, ReportFormat::json));
    write_text(dir / "metrics.csv", format_metrics_csv(r));
    if (!save_committees) return;
    const auto cdir = dir / "committees";
    std::filesystem::create_directories(cdir);
    for (const auto& c : r.cells) {
        if (c.committee) save_committee(*c.committee, cdir / (c.dataset + "-seed" + std::to_string(c.seed) + ".committee"));
    }
}

}  // namespace gdm
