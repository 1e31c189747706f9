#pragma once

// Persistence and rendering: the feature CSV, PGM output, evaluation reports
// (JSON and one-row CSV) and the classifier-comparison table with the
// published reference rows.

#include <thermocad/error.hpp>
#include <thermocad/eval.hpp>
#include <thermocad/imgio.hpp>
#include <thermocad/texture.hpp>

#include <json.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

namespace thermocad {

// ---------------------------------------------------------------------------
// Feature table

inline constexpr std::array<std::string_view, 12> kFeatureColumns{
    "id", "m1", "m3", "gln_0", "gln_45", "gln_90", "gln_135", "rp_0", "rp_45", "rp_90", "rp_135", "label"};

struct FeatureTable {
    std::vector<FeatureVector> rows;

    friend bool operator==(const FeatureTable&, const FeatureTable&) = default;
};

// Shortest decimal that reads back to the same double.
[[nodiscard]] inline std::string format_double(double v)
{
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line)
{
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            cells.emplace_back(line.substr(start));
            return cells;
        }
        cells.emplace_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

inline std::string join(std::span<const std::string_view> items, std::string_view sep)
{
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i != 0) {
            out += sep;
        }
        out += items[i];
    }
    return out;
}

inline double parse_cell(const std::string& cell, std::size_t row, std::string_view column)
{
    double value = 0.0;
    const char* end = cell.data() + cell.size();
    const auto res = std::from_chars(cell.data(), end, value);
    if (cell.empty() || res.ec != std::errc{} || res.ptr != end || !std::isfinite(value)) {
        throw FormatError("row " + std::to_string(row) + ", column '" + std::string(column) +
                          "': not a finite number: '" + cell + "'");
    }
    return value;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw InputError("cannot open " + path.string() + " for writing");
    }
    out << text;
    if (!out) {
        throw InputError("error writing " + path.string());
    }
}

inline std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace detail

[[nodiscard]] inline std::string features_to_csv(const FeatureTable& table)
{
    std::string out = detail::join(kFeatureColumns, ",") + "\n";
    for (const auto& fv : table.rows) {
        if (fv.id.empty() || fv.id.find_first_of(",\"\r\n") != std::string::npos) {
            throw FormatError("sample id '" + fv.id + "' is empty or contains a CSV delimiter");
        }
        out += fv.id;
        for (double v : fv.values()) {
            if (!std::isfinite(v)) {
                throw FormatError("sample '" + fv.id + "' has a non-finite feature");
            }
            out += ',';
            out += format_double(v);
        }
        out += ',';
        out += to_string(fv.label);
        out += '\n';
    }
    return out;
}

[[nodiscard]] inline FeatureTable features_from_csv(std::string_view text)
{
    FeatureTable table;
    std::size_t row = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) {
            eol = text.size();
        }
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (row == 0) {
            const auto header = detail::split_csv_line(line);
            const bool match = header.size() == kFeatureColumns.size() &&
                               std::equal(header.begin(), header.end(), kFeatureColumns.begin());
            if (!match) {
                std::string found;
                for (std::size_t i = 0; i < header.size(); ++i) {
                    found += (i != 0 ? "," : "") + header[i];
                }
                throw FormatError("feature CSV header mismatch: expected '" + detail::join(kFeatureColumns, ",") +
                                  "', found '" + found + "'");
            }
            ++row;
            continue;
        }
        if (line.empty()) {
            ++row;
            continue;
        }
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != kFeatureColumns.size()) {
            throw FormatError("row " + std::to_string(row) + ": expected " + std::to_string(kFeatureColumns.size()) +
                              " cells, found " + std::to_string(cells.size()));
        }
        FeatureVector fv;
        fv.id = cells[0];
        if (fv.id.empty()) {
            throw FormatError("row " + std::to_string(row) + ": empty id");
        }
        std::array<double, kFeatureCount> v{};
        for (std::size_t c = 0; c < kFeatureCount; ++c) {
            v[c] = detail::parse_cell(cells[c + 1], row, kFeatureColumns[c + 1]);
        }
        fv.m1 = v[0];
        fv.m3 = v[1];
        std::copy(v.begin() + 2, v.begin() + 6, fv.gln.begin());
        std::copy(v.begin() + 6, v.begin() + 10, fv.rp.begin());
        try {
            fv.label = parse_label(cells.back());
        } catch (const FormatError& e) {
            throw FormatError("row " + std::to_string(row) + ", column 'label': " + e.what());
        }
        table.rows.push_back(std::move(fv));
        ++row;
    }
    if (row == 0) {
        throw FormatError("feature CSV is empty (missing header)");
    }
    return table;
}

inline void write_features(const FeatureTable& table, const std::filesystem::path& path)
{
    detail::write_text_file(path, features_to_csv(table));
}

[[nodiscard]] inline FeatureTable read_features(const std::filesystem::path& path)
{
    try {
        return features_from_csv(detail::read_text_file(path));
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// PGM output

// Writes an 8-bit P5 (binary) or P2 (ASCII) PGM with maxval 255.
inline void write_pgm(const std::filesystem::path& path, int width, int height, std::span<const std::uint8_t> bytes,
                      bool binary = true)
{
    if (bytes.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw DimensionError("PGM raster size does not match " + std::to_string(width) + "x" + std::to_string(height));
    }
    std::string out = (binary ? "P5\n" : "P2\n") + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
    if (binary) {
        out.append(bytes.begin(), bytes.end());
    } else {
        for (std::size_t i = 0; i < bytes.size(); ++i) {
            out += std::to_string(bytes[i]);
            out += (i + 1) % static_cast<std::size_t>(width) == 0 ? '\n' : ' ';
        }
    }
    detail::write_text_file(path, out);
}

// Writes the pixel values of `image` (levels <= 256) as a binary PGM.
inline void write_pgm(const std::filesystem::path& path, const GrayImage& image)
{
    if (image.levels() > 256) {
        throw ConfigError("cannot store more than 256 gray levels in an 8-bit PGM");
    }
    std::vector<std::uint8_t> bytes(image.pixels().begin(), image.pixels().end());
    write_pgm(path, image.width(), image.height(), bytes);
}

// ---------------------------------------------------------------------------
// Evaluation report output

[[nodiscard]] inline nlohmann::json to_json(const ConfusionMatrix& cm)
{
    return {{"tp", cm.tp}, {"tn", cm.tn}, {"fp", cm.fp}, {"fn", cm.fn}};
}

[[nodiscard]] inline nlohmann::json optional_json(const std::optional<double>& v)
{
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

[[nodiscard]] inline nlohmann::json to_json(const EvalReport& report)
{
    nlohmann::json folds = nlohmann::json::array();
    for (const auto& cm : report.per_fold) {
        folds.push_back(to_json(cm));
    }
    const Metrics& m = report.metrics;
    return {
        {"format", "thermocad-eval"},
        {"version", 1},
        {"classifier", report.classifier},
        {"test_mode", report.test_mode},
        {"confusion", to_json(report.pooled)},
        {"metrics",
         {{"accuracy", m.accuracy},
          {"precision", optional_json(m.precision)},
          {"sensitivity", optional_json(m.sensitivity)},
          {"specificity", optional_json(m.specificity)},
          {"youden", optional_json(m.youden)},
          {"auc", optional_json(report.auc)}}},
        {"per_fold", folds},
    };
}

// "61.8%" style; "-" when undefined.
[[nodiscard]] inline std::string format_percent(const std::optional<double>& v)
{
    if (!v) {
        return "-";
    }
    std::array<char, 32> buf{};
    std::snprintf(buf.data(), buf.size(), "%.1f%%", *v * 100.0);
    return buf.data();
}

[[nodiscard]] inline std::string format_youden(const std::optional<double>& v)
{
    if (!v) {
        return "-";
    }
    std::array<char, 32> buf{};
    std::snprintf(buf.data(), buf.size(), "%.2f", *v);
    return buf.data();
}

// "N (healthy/unhealthy)".
[[nodiscard]] inline std::string format_samples(std::int64_t healthy, std::int64_t unhealthy)
{
    return std::to_string(healthy + unhealthy) + " (" + std::to_string(healthy) + "/" + std::to_string(unhealthy) + ")";
}

// ---------------------------------------------------------------------------
// Published reference results

struct ReferenceRow {
    std::string_view table;     // "classifiers" or "works"
    std::string_view name;
    std::string_view samples;
    std::string_view sensitivity;
    std::string_view specificity;
    std::string_view accuracy;  // "-" when not published
    std::string_view youden;
    std::string_view test_mode; // empty when not published
};

// Published values, verbatim. The classifier rows were all obtained on the
// 102-image (54/48) set.
inline constexpr std::array<ReferenceRow, 4> kReferenceClassifiers{{
    {"classifiers", "SMO", "102 (54/48)", "62.9%", "61.8%", "61.8%", "0.24", "7-fold cross validation"},
    {"classifiers", "RBFNetwork", "102 (54/48)", "60%", "58.8%", "58.5%", "0.18", "leave one out"},
    {"classifiers", "NaiveBayes", "102 (54/48)", "56.8%", "56.9%", "56.8%", "0.12", "7-fold cross validation"},
    {"classifiers", "SVM", "102 (54/48)", "50%", "57.4%", "53.9%", "0.07", "leave one out"},
}};

// The last row restates the SMO classifier row with different sensitivity and
// specificity; both are kept as published.
inline constexpr std::array<ReferenceRow, 8> kReferenceWorks{{
    {"works", "Arora et al. (2008)", "94 (34/60)", "97%", "44%", "-", "0.41", ""},
    {"works", "Wishart et al. (2010)", "106 (41/65)", "48%", "70%", "-", "0.18", ""},
    {"works", "Umadevi et al. (2010)", "50 (44/6)", "66.7%", "97.7%", "-", "0.64", ""},
    {"works", "Acharya et al. (2012)", "50 (25/25)", "85.7%", "90.5%", "88.1%", "0.76", ""},
    {"works", "Brochatt (2012) a", "51 (14/37)", "83.8%", "57.1%", "76.5%", "0.41", ""},
    {"works", "Brochatt (2012) b", "51 (14/37)", "83.8%", "78.6%", "82.4%", "0.62", ""},
    {"works", "Brochatt (2012) c", "51 (14/37)", "91.9%", "78.6%", "88.2%", "0.71", ""},
    {"works", "This work (SMO Result)", "102 (54/48)", "61.72%", "62.9%", "61.8%", "0.24", ""},
}};

// Parses "61.8%" to 0.618 and "0.24" to 0.24; "-" is undefined.
[[nodiscard]] inline std::optional<double> parse_published(std::string_view cell)
{
    if (cell.empty() || cell == "-") {
        return std::nullopt;
    }
    const bool percent = cell.back() == '%';
    if (percent) {
        cell.remove_suffix(1);
    }
    double v = 0.0;
    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size()) {
        throw FormatError("unparseable published value '" + std::string(cell) + "'");
    }
    return percent ? v / 100.0 : v;
}

// |sens + spec - 1 - youden| for a published row, when all three are published.
[[nodiscard]] inline std::optional<double> published_youden_gap(const ReferenceRow& row)
{
    const auto sens = parse_published(row.sensitivity);
    const auto spec = parse_published(row.specificity);
    const auto youden = parse_published(row.youden);
    if (!sens || !spec || !youden) {
        return std::nullopt;
    }
    return std::abs(*sens + *spec - 1.0 - *youden);
}

// ---------------------------------------------------------------------------
// Comparison table

struct ComparisonRow {
    std::string name;
    std::string samples;
    std::string sensitivity;
    std::string specificity;
    std::string accuracy;
    std::string youden;
    std::string test_mode;
    bool published = false;
};

[[nodiscard]] inline ComparisonRow comparison_row(const std::string& name, const EvalReport& report)
{
    const Metrics& m = report.metrics;
    return ComparisonRow{name,
                         format_samples(report.pooled.negatives(), report.pooled.positives()),
                         format_percent(m.sensitivity),
                         format_percent(m.specificity),
                         format_percent(m.accuracy),
                         format_youden(m.youden),
                         report.test_mode,
                         false};
}

[[nodiscard]] inline ComparisonRow comparison_row(const ReferenceRow& ref)
{
    return ComparisonRow{std::string(ref.name),        std::string(ref.samples),  std::string(ref.sensitivity),
                         std::string(ref.specificity), std::string(ref.accuracy), std::string(ref.youden),
                         std::string(ref.test_mode),   true};
}

struct Comparison {
    std::vector<ComparisonRow> rows;
    std::string text;
    nlohmann::json json;
};

inline constexpr std::array<std::string_view, 8> kComparisonColumns{
    "Classifier", "Samples used", "Sens.", "Spec.", "Acc.", "Youden", "Test Mode", "Source"};

// Our rows sorted by accuracy descending (ties by name), then the published
// rows in their original order when `include_reference` is set.
[[nodiscard]] inline Comparison render_comparison(std::span<const std::pair<std::string, EvalReport>> ours,
                                                  bool include_reference)
{
    std::vector<std::size_t> order(ours.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double acc_a = ours[a].second.metrics.accuracy;
        const double acc_b = ours[b].second.metrics.accuracy;
        if (acc_a != acc_b) {
            return acc_a > acc_b;
        }
        return ours[a].first < ours[b].first;
    });

    Comparison out;
    for (std::size_t i : order) {
        out.rows.push_back(comparison_row(ours[i].first, ours[i].second));
    }
    if (include_reference) {
        for (const auto& ref : kReferenceClassifiers) {
            out.rows.push_back(comparison_row(ref));
        }
        for (const auto& ref : kReferenceWorks) {
            out.rows.push_back(comparison_row(ref));
        }
    }

    const auto cells = [](const ComparisonRow& r) {
        return std::array<std::string, 8>{r.name,     r.samples, r.sensitivity, r.specificity,
                                          r.accuracy, r.youden,  r.test_mode.empty() ? "-" : r.test_mode,
                                          r.published ? "published" : "measured"};
    };
    std::array<std::size_t, 8> widths{};
    for (std::size_t c = 0; c < widths.size(); ++c) {
        widths[c] = kComparisonColumns[c].size();
    }
    for (const auto& r : out.rows) {
        const auto row = cells(r);
        for (std::size_t c = 0; c < widths.size(); ++c) {
            widths[c] = std::max(widths[c], row[c].size());
        }
    }
    const auto emit = [&](const auto& row) {
        std::string line;
        for (std::size_t c = 0; c < widths.size(); ++c) {
            std::string cell(row[c]);
            if (c + 1 < widths.size()) {
                cell.resize(widths[c], ' ');
                cell += "  ";
            }
            line += cell;
        }
        out.text += line + "\n";
    };
    emit(kComparisonColumns);
    for (const auto& r : out.rows) {
        emit(cells(r));
    }

    out.json = nlohmann::json::array();
    for (const auto& r : out.rows) {
        out.json.push_back({{"name", r.name},
                            {"samples", r.samples},
                            {"sensitivity", r.sensitivity},
                            {"specificity", r.specificity},
                            {"accuracy", r.accuracy},
                            {"youden", r.youden},
                            {"test_mode", r.test_mode},
                            {"source", r.published ? "published" : "measured"}});
    }
    return out;
}

// One-row CSV with the comparison-table columns.
[[nodiscard]] inline std::string report_to_csv_row(const std::string& name, const EvalReport& report)
{
    const ComparisonRow r = comparison_row(name, report);
    return "classifier,samples,sensitivity,specificity,accuracy,youden,test_mode\n" + r.name + "," + r.samples + "," +
           r.sensitivity + "," + r.specificity + "," + r.accuracy + "," + r.youden + "," + r.test_mode + "\n";
}

} // namespace thermocad
