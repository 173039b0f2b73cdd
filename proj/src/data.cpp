#include "gdm/data.hpp"

#include "gdm/random.hpp"
#include "gdm/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace gdm {

namespace {

std::string where(const std::string& source, std::size_t line) {
    return source + ": row " + std::to_string(line);
}

std::string_view unquote(std::string_view s) {
    s = text::trim(s);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

std::size_t train_count(std::size_t n, double fraction, SplitRounding rounding) {
    double x = fraction * static_cast<double>(n);
    // 0.8 * 70 is 56.000000000000007 in binary; treat it as exactly 56.
    if (const double near = std::round(x); std::abs(x - near) <= 1e-9 * std::max(1.0, near)) x = near;
    double r = 0.0;
    switch (rounding) {
        case SplitRounding::half_up: r = std::floor(x + 0.5); break;
        case SplitRounding::down: r = std::floor(x); break;
        case SplitRounding::up: r = std::ceil(x); break;
    }
    return static_cast<std::size_t>(std::max(0.0, r));
}

void check_fraction(double train_fraction) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw DataError("train fraction must lie in (0, 1), got " + text::format_double(train_fraction));
    }
}

}  // namespace

Dataset::Dataset(FeatureMatrix features, std::vector<int> labels, std::vector<std::string> class_names,
                 std::vector<std::string> feature_names)
    : features_(std::move(features)),
      labels_(std::move(labels)),
      class_names_(std::move(class_names)),
      feature_names_(std::move(feature_names)) {
    if (labels_.empty()) throw DataError("dataset has no rows");
    if (features_.cols() < 1) throw DataError("dataset has no feature columns");
    if (static_cast<std::size_t>(features_.rows()) != labels_.size()) {
        throw DataError("feature rows (" + std::to_string(features_.rows()) + ") and labels (" +
                        std::to_string(labels_.size()) + ") differ");
    }
    if (class_names_.size() < 2) throw DataError("single-class dataset");
    if (feature_names_.empty()) {
        for (Eigen::Index j = 0; j < features_.cols(); ++j) feature_names_.push_back("x" + std::to_string(j));
    }
    if (feature_names_.size() != num_features()) throw DataError("feature name count differs from column count");
    std::vector<bool> seen(class_names_.size(), false);
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        const int y = labels_[i];
        if (y < 0 || static_cast<std::size_t>(y) >= class_names_.size()) {
            throw DataError("label " + std::to_string(y) + " at row " + std::to_string(i) + " out of range");
        }
        seen[static_cast<std::size_t>(y)] = true;
    }
    for (std::size_t c = 0; c < seen.size(); ++c) {
        if (!seen[c]) throw DataError("class '" + class_names_[c] + "' has no instances");
    }
    if (!features_.allFinite()) throw DataError("features contain non-finite values");
}

std::vector<std::size_t> Dataset::class_counts() const {
    std::vector<std::size_t> counts(num_classes(), 0);
    for (int y : labels_) ++counts[static_cast<std::size_t>(y)];
    return counts;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
    FeatureMatrix f(static_cast<Eigen::Index>(rows.size()), features_.cols());
    std::vector<int> y;
    y.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= size()) throw DataError("subset row index out of range");
        f.row(static_cast<Eigen::Index>(i)) = features_.row(static_cast<Eigen::Index>(rows[i]));
        y.push_back(labels_[rows[i]]);
    }
    return Dataset(std::move(f), std::move(y), class_names_, feature_names_);
}

Dataset Dataset::with_features(FeatureMatrix features) const {
    if (features.rows() != features_.rows() || features.cols() != features_.cols()) {
        throw DataError("replacement feature matrix has a different shape");
    }
    return Dataset(std::move(features), labels_, class_names_, feature_names_);
}

// ---------------------------------------------------------------------------

ColumnRef ColumnRef::parse(std::string_view token) {
    token = text::trim(token);
    ColumnRef ref;
    if (const auto idx = text::parse_int(token); idx && *idx >= 0) {
        ref.index = static_cast<std::size_t>(*idx);
    } else {
        ref.name = std::string(token);
        ref.by_name = true;
    }
    return ref;
}

Dataset read_csv(std::istream& in, const CsvOptions& options, const std::string& source) {
    struct RawRow {
        std::size_t line;
        std::vector<std::string> fields;
    };
    std::vector<std::string> header;
    std::vector<RawRow> rows;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        const auto parts = options.delimiter == Delimiter::comma ? text::split(line, ',') : text::split_whitespace(line);
        std::vector<std::string> fields;
        fields.reserve(parts.size());
        for (auto p : parts) fields.emplace_back(unquote(p));
        if (options.header && header.empty()) {
            header = std::move(fields);
            continue;
        }
        rows.push_back({line_no, std::move(fields)});
    }
    if (rows.empty()) throw DataError(source + ": no data rows");

    const std::size_t width = header.empty() ? rows.front().fields.size() : header.size();
    if (width < 2) throw DataError(source + ": need at least one feature column and a label column");

    const auto resolve = [&](const ColumnRef& ref) -> std::size_t {
        if (!ref.by_name) {
            if (ref.index >= width) {
                throw DataError(source + ": column " + std::to_string(ref.index) + " out of range (" +
                                std::to_string(width) + " columns)");
            }
            return ref.index;
        }
        if (header.empty()) throw DataError(source + ": column '" + ref.name + "' given by name but file has no header");
        const auto it = std::find(header.begin(), header.end(), ref.name);
        if (it == header.end()) throw DataError(source + ": no column named '" + ref.name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };

    const std::size_t label_col = options.label_column ? resolve(*options.label_column) : width - 1;
    std::vector<bool> dropped(width, false);
    for (const auto& ref : options.drop_columns) dropped[resolve(ref)] = true;
    if (dropped[label_col]) throw DataError(source + ": label column is also listed as dropped");

    std::vector<std::size_t> feature_cols;
    for (std::size_t j = 0; j < width; ++j) {
        if (j != label_col && !dropped[j]) feature_cols.push_back(j);
    }
    if (feature_cols.empty()) throw DataError(source + ": no feature columns left after dropping");

    std::vector<std::string> feature_names;
    for (auto j : feature_cols) feature_names.push_back(header.empty() ? "x" + std::to_string(j) : header[j]);

    FeatureMatrix features(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(feature_cols.size()));
    std::vector<int> labels;
    labels.reserve(rows.size());
    std::vector<std::string> class_names;
    std::unordered_map<std::string, int> class_index;

    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (r.fields.size() != width) {
            throw DataError(where(source, r.line) + ": expected " + std::to_string(width) + " columns, found " +
                            std::to_string(r.fields.size()));
        }
        for (std::size_t k = 0; k < feature_cols.size(); ++k) {
            const auto& cell = r.fields[feature_cols[k]];
            if (cell.empty() || cell == "?" || cell == "NA") {
                throw DataError(where(source, r.line) + ", column " + std::to_string(feature_cols[k]) +
                                ": missing value");
            }
            const auto v = text::parse_double(cell);
            if (!v) {
                throw DataError(where(source, r.line) + ", column " + std::to_string(feature_cols[k]) +
                                ": non-numeric value '" + cell + "'");
            }
            features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = *v;
        }
        std::string label = r.fields[label_col];
        if (label.empty() || label == "?") throw DataError(where(source, r.line) + ": missing label");
        if (!options.label_map.empty()) {
            const auto it = options.label_map.find(label);
            if (it == options.label_map.end()) {
                throw DataError(where(source, r.line) + ": label '" + label + "' not covered by label_map");
            }
            label = it->second;
        }
        auto [it, inserted] = class_index.try_emplace(label, static_cast<int>(class_names.size()));
        if (inserted) class_names.push_back(label);
        labels.push_back(it->second);
    }
    if (class_names.size() < 2) throw DataError(source + ": single-class dataset");
    return Dataset(std::move(features), std::move(labels), std::move(class_names), std::move(feature_names));
}

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open data file '" + path.string() + "' (missing file?)");
    return read_csv(in, options, path.string());
}

void write_csv(const Dataset& ds, std::ostream& out) {
    const auto check = [](const std::string& s) {
        if (s.find_first_of(",\n\r\"") != std::string::npos) throw DataError("name '" + s + "' is not CSV-safe");
    };
    for (const auto& name : ds.feature_names()) {
        check(name);
        out << name << ',';
    }
    out << "class\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (double v : ds.row(i)) out << text::format_double(v) << ',';
        const auto& cls = ds.class_names()[static_cast<std::size_t>(ds.label(i))];
        check(cls);
        out << cls << '\n';
    }
}

void write_csv(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    write_csv(ds, out);
}

// ---------------------------------------------------------------------------

SplitRounding parse_split_rounding(std::string_view s) {
    const auto v = text::to_lower(text::trim(s));
    if (v == "half-up" || v == "half_up" || v == "nearest") return SplitRounding::half_up;
    if (v == "down" || v == "floor") return SplitRounding::down;
    if (v == "up" || v == "ceil") return SplitRounding::up;
    throw DataError("unknown split rounding '" + std::string(s) + "' (half-up|down|up)");
}

std::string to_string(SplitRounding r) {
    switch (r) {
        case SplitRounding::half_up: return "half-up";
        case SplitRounding::down: return "down";
        case SplitRounding::up: return "up";
    }
    return "?";
}

SplitPair stratified_split(const Dataset& ds, double train_fraction, std::uint64_t seed, SplitRounding rounding) {
    check_fraction(train_fraction);
    std::vector<std::vector<std::size_t>> by_class(ds.num_classes());
    for (std::size_t i = 0; i < ds.size(); ++i) by_class[static_cast<std::size_t>(ds.label(i))].push_back(i);

    const SeedStream root = SeedStream(seed).derive("stratified-split");
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> test_rows;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto& rows = by_class[c];
        if (rows.size() < 2) {
            throw DataError("class '" + ds.class_names()[c] + "' has " + std::to_string(rows.size()) +
                            " instance(s); stratified split needs at least 2");
        }
        SeedStream rng = root.derive(c);
        rng.shuffle(std::span<std::size_t>(rows));
        const std::size_t k = std::clamp<std::size_t>(train_count(rows.size(), train_fraction, rounding), 1,
                                                       rows.size() - 1);
        train_rows.insert(train_rows.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(k));
        test_rows.insert(test_rows.end(), rows.begin() + static_cast<std::ptrdiff_t>(k), rows.end());
    }
    std::sort(train_rows.begin(), train_rows.end());
    std::sort(test_rows.begin(), test_rows.end());
    return SplitPair{ds.subset(train_rows), ds.subset(test_rows), seed, train_fraction, std::move(train_rows),
                     std::move(test_rows)};
}

SplitPair random_split(const Dataset& ds, double train_fraction, std::uint64_t seed, SplitRounding rounding) {
    check_fraction(train_fraction);
    std::vector<std::size_t> rows(ds.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    SeedStream rng = SeedStream(seed).derive("random-split");
    rng.shuffle(std::span<std::size_t>(rows));
    if (ds.size() < 2) throw DataError("random split needs at least 2 rows");
    const std::size_t k = std::clamp<std::size_t>(train_count(ds.size(), train_fraction, rounding), 1, ds.size() - 1);
    std::vector<std::size_t> train_rows(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(k));
    std::vector<std::size_t> test_rows(rows.begin() + static_cast<std::ptrdiff_t>(k), rows.end());
    std::sort(train_rows.begin(), train_rows.end());
    std::sort(test_rows.begin(), test_rows.end());
    try {
        return SplitPair{ds.subset(train_rows), ds.subset(test_rows), seed, train_fraction, std::move(train_rows),
                         std::move(test_rows)};
    } catch (const DataError& e) {
        throw DataError(std::string("random split left a class unrepresented (") + e.what() +
                        "); use the stratified split");
    }
}

// ---------------------------------------------------------------------------

Scaler fit_scaler(const Dataset& train) {
    const auto& x = train.features();
    const auto n = static_cast<double>(x.rows());
    Scaler s;
    s.mean.resize(train.num_features());
    s.stddev.resize(train.num_features());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double mean = x.col(j).sum() / n;
        const double var = (x.col(j).array() - mean).square().sum() / n;
        const double sd = std::sqrt(var);
        s.mean[static_cast<std::size_t>(j)] = mean;
        // Rounding noise in a constant column must not be blown up by the division.
        s.stddev[static_cast<std::size_t>(j)] = sd <= 1e-12 * std::max(1.0, std::abs(mean)) ? 0.0 : sd;
    }
    return s;
}

void Scaler::transform_row(std::span<double> x) const {
    if (x.size() != mean.size()) throw DataError("scaler dimension mismatch");
    for (std::size_t j = 0; j < x.size(); ++j) {
        x[j] -= mean[j];
        if (stddev[j] > 0.0) x[j] /= stddev[j];
    }
}

Dataset Scaler::transform(const Dataset& ds) const {
    if (ds.num_features() != mean.size()) throw DataError("scaler dimension mismatch");
    FeatureMatrix f = ds.features();
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
        transform_row(std::span<double>(f.data() + i * f.cols(), static_cast<std::size_t>(f.cols())));
    }
    return ds.with_features(std::move(f));
}

StandardizedPair standardize(const Dataset& train, const Dataset& test) {
    Scaler scaler = fit_scaler(train);
    Dataset tr = scaler.transform(train);
    Dataset te = scaler.transform(test);
    return StandardizedPair{std::move(tr), std::move(te), std::move(scaler)};
}

// ---------------------------------------------------------------------------

DatasetManifest parse_manifest(std::string_view content, const std::filesystem::path& base_dir,
                               const std::string& source) {
    DatasetManifest m;
    bool have_path = false;
    std::size_t line_no = 0;
    for (auto raw : text::split(content, '\n')) {
        ++line_no;
        auto line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = text::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw DataError(where(source, line_no) + ": expected key = value");
        const auto key = text::to_lower(text::trim(line.substr(0, eq)));
        const auto value = text::trim(line.substr(eq + 1));
        if (key == "name") {
            m.name = std::string(value);
        } else if (key == "path") {
            m.path = std::filesystem::path(std::string(value));
            if (m.path.is_relative()) m.path = base_dir / m.path;
            have_path = true;
        } else if (key == "label_column") {
            if (text::to_lower(value) == "last") {
                m.csv.label_column.reset();
            } else {
                m.csv.label_column = ColumnRef::parse(value);
            }
        } else if (key == "header") {
            if (!text::parse_bool(value, m.csv.header)) throw DataError(where(source, line_no) + ": bad header flag");
        } else if (key == "delimiter") {
            const auto v = text::to_lower(value);
            if (v == "comma" || v == ",") {
                m.csv.delimiter = Delimiter::comma;
            } else if (v == "whitespace" || v == "tab" || v == "space") {
                m.csv.delimiter = Delimiter::whitespace;
            } else {
                throw DataError(where(source, line_no) + ": delimiter must be comma or whitespace");
            }
        } else if (key == "drop_columns") {
            for (auto tok : text::split(value, ',')) {
                if (!text::trim(tok).empty()) m.csv.drop_columns.push_back(ColumnRef::parse(tok));
            }
        } else if (key == "label_map") {
            for (auto tok : text::split(value, ',')) {
                tok = text::trim(tok);
                if (tok.empty()) continue;
                const auto colon = tok.find(':');
                if (colon == std::string_view::npos) throw DataError(where(source, line_no) + ": label_map needs raw:name");
                m.csv.label_map[std::string(text::trim(tok.substr(0, colon)))] =
                    std::string(text::trim(tok.substr(colon + 1)));
            }
        } else if (key == "url") {
            m.url = std::string(value);
        } else if (key == "sha256") {
            m.sha256 = text::to_lower(value);
        } else {
            throw DataError(where(source, line_no) + ": unknown manifest key '" + key + "'");
        }
    }
    if (!have_path) throw DataError(source + ": manifest has no path");
    return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    DatasetManifest m = parse_manifest(ss.str(), path.parent_path(), path.string());
    if (m.name.empty()) m.name = path.stem().string();
    return m;
}

Dataset load_dataset(const DatasetManifest& manifest) { return load_csv(manifest.path, manifest.csv); }

}  // namespace gdm
