#pragma once

// Co-occurrence and run-length texture statistics over a masked grayscale image,
// and the ten-element texture descriptor built from them.
//
// ROI handling: a co-occurrence pair counts only when both pixels are in the
// ROI; runs are broken at ROI boundaries; the run-percentage area is the
// in-ROI pixel count.

#include <thermocad/error.hpp>
#include <thermocad/imgio.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace thermocad {

// Pixel displacement for co-occurrence counting: dx columns, dy rows.
struct Offset {
    int dx = 0;
    int dy = 1;

    Offset() = default;
    Offset(int dx_, int dy_) : dx(dx_), dy(dy_)
    {
        if (dx == 0 && dy == 0) {
            throw ConfigError("co-occurrence offset must be nonzero");
        }
    }

    friend bool operator==(const Offset&, const Offset&) = default;
};

enum class Direction { deg0, deg45, deg90, deg135 };

inline constexpr std::array<Direction, 4> kAllDirections{Direction::deg0, Direction::deg45,
                                                         Direction::deg90, Direction::deg135};

[[nodiscard]] constexpr int degrees(Direction d) noexcept
{
    switch (d) {
    case Direction::deg0: return 0;
    case Direction::deg45: return 45;
    case Direction::deg90: return 90;
    case Direction::deg135: return 135;
    }
    return 0;
}

// Unit step of a scan line. 0° runs left to right along rows, 90° top to bottom
// along columns, 45° toward the upper right and 135° toward the upper left.
struct Step {
    int dx;
    int dy;
};

[[nodiscard]] constexpr Step scan_step(Direction d) noexcept
{
    switch (d) {
    case Direction::deg0: return {1, 0};
    case Direction::deg45: return {1, -1};
    case Direction::deg90: return {0, 1};
    case Direction::deg135: return {-1, -1};
    }
    return {1, 0};
}

// Directional (unsymmetrized) gray-level co-occurrence counts.
class CooccurrenceMatrix {
public:
    CooccurrenceMatrix(int levels, Offset offset)
        : levels_(levels), offset_(offset),
          counts_(static_cast<std::size_t>(levels) * static_cast<std::size_t>(levels), 0)
    {
    }

    [[nodiscard]] int levels() const noexcept { return levels_; }
    [[nodiscard]] Offset offset() const noexcept { return offset_; }

    [[nodiscard]] std::int64_t at(int i, int j) const noexcept { return counts_[index(i, j)]; }
    std::int64_t& at(int i, int j) noexcept { return counts_[index(i, j)]; }

    [[nodiscard]] std::int64_t total() const noexcept
    {
        std::int64_t sum = 0;
        for (auto c : counts_) {
            sum += c;
        }
        return sum;
    }

    [[nodiscard]] const std::vector<std::int64_t>& counts() const noexcept { return counts_; }

    friend bool operator==(const CooccurrenceMatrix&, const CooccurrenceMatrix&) = default;

private:
    [[nodiscard]] std::size_t index(int i, int j) const noexcept
    {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(levels_) + static_cast<std::size_t>(j);
    }

    int levels_;
    Offset offset_;
    std::vector<std::int64_t> counts_;
};

// Co-occurrence counts normalized to a joint probability table.
class ProbabilityMatrix {
public:
    ProbabilityMatrix(int levels, std::vector<double> probs) : levels_(levels), probs_(std::move(probs))
    {
        if (probs_.size() != static_cast<std::size_t>(levels) * static_cast<std::size_t>(levels)) {
            throw DimensionError("probability table size does not match level count");
        }
    }

    [[nodiscard]] int levels() const noexcept { return levels_; }
    [[nodiscard]] double at(int i, int j) const noexcept
    {
        return probs_[static_cast<std::size_t>(i) * static_cast<std::size_t>(levels_) + static_cast<std::size_t>(j)];
    }
    [[nodiscard]] const std::vector<double>& probs() const noexcept { return probs_; }

private:
    int levels_;
    std::vector<double> probs_;
};

// Maximal-run counts by gray level and exact run length along one direction.
class RunLengthMatrix {
public:
    RunLengthMatrix(int levels, int max_len, Direction direction)
        : levels_(levels), max_len_(max_len), direction_(direction),
          counts_(static_cast<std::size_t>(levels) * static_cast<std::size_t>(max_len), 0)
    {
    }

    [[nodiscard]] int levels() const noexcept { return levels_; }
    [[nodiscard]] int max_len() const noexcept { return max_len_; }
    [[nodiscard]] Direction direction() const noexcept { return direction_; }

    // In-ROI pixels scanned (the run-percentage area).
    [[nodiscard]] std::int64_t n_pixels() const noexcept { return n_pixels_; }

    // Number of maximal runs of `level` with length exactly `length` (1-based).
    [[nodiscard]] std::int64_t at(int level, int length) const noexcept { return counts_[index(level, length)]; }

    [[nodiscard]] std::int64_t total_runs() const noexcept
    {
        std::int64_t sum = 0;
        for (auto c : counts_) {
            sum += c;
        }
        return sum;
    }

    [[nodiscard]] std::int64_t runs_of_level(int level) const noexcept
    {
        std::int64_t sum = 0;
        for (int l = 1; l <= max_len_; ++l) {
            sum += at(level, l);
        }
        return sum;
    }

    void add_run(int level, int length) noexcept
    {
        ++counts_[index(level, length)];
        n_pixels_ += length;
    }

    friend bool operator==(const RunLengthMatrix&, const RunLengthMatrix&) = default;

private:
    [[nodiscard]] std::size_t index(int level, int length) const noexcept
    {
        return static_cast<std::size_t>(level) * static_cast<std::size_t>(max_len_) +
               static_cast<std::size_t>(length - 1);
    }

    int levels_;
    int max_len_;
    Direction direction_;
    std::int64_t n_pixels_ = 0;
    std::vector<std::int64_t> counts_;
};

enum class Label { normal, finding };

[[nodiscard]] constexpr std::string_view to_string(Label label) noexcept
{
    return label == Label::finding ? "finding" : "normal";
}

[[nodiscard]] inline Label parse_label(std::string_view text)
{
    if (text == "normal") {
        return Label::normal;
    }
    if (text == "finding") {
        return Label::finding;
    }
    throw FormatError("unknown label '" + std::string(text) + "' (expected 'normal' or 'finding')");
}

inline constexpr std::size_t kFeatureCount = 10;

// Ten-element texture descriptor of one breast image. Direction-indexed arrays
// follow kAllDirections order (0°, 45°, 90°, 135°).
struct FeatureVector {
    std::string id;
    double m1 = 0.0;
    double m3 = 0.0;
    std::array<double, 4> gln{};
    std::array<double, 4> rp{};
    Label label = Label::normal;

    // Numeric fields in declaration order: m1, m3, gln_0..gln_135, rp_0..rp_135.
    [[nodiscard]] std::array<double, kFeatureCount> values() const noexcept
    {
        return {m1, m3, gln[0], gln[1], gln[2], gln[3], rp[0], rp[1], rp[2], rp[3]};
    }

    friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

// Counts C(i, j): in-ROI pixels of value i whose in-ROI partner at `offset` has
// value j. Partners outside the image are skipped.
[[nodiscard]] inline CooccurrenceMatrix cooccurrence(const GrayImage& image, Offset offset)
{
    CooccurrenceMatrix cm(image.levels(), offset);
    const int x_begin = std::max(0, -offset.dx);
    const int x_end = std::min(image.width(), image.width() - offset.dx);
    const int y_begin = std::max(0, -offset.dy);
    const int y_end = std::min(image.height(), image.height() - offset.dy);
    std::int64_t pairs = 0;
    for (int y = y_begin; y < y_end; ++y) {
        for (int x = x_begin; x < x_end; ++x) {
            if (!image.in_roi(x, y) || !image.in_roi(x + offset.dx, y + offset.dy)) {
                continue;
            }
            ++cm.at(image.at(x, y), image.at(x + offset.dx, y + offset.dy));
            ++pairs;
        }
    }
    if (pairs == 0) {
        throw EmptyPairsError("no in-ROI pixel pair at offset (" + std::to_string(offset.dx) + ", " +
                              std::to_string(offset.dy) + ")");
    }
    return cm;
}

[[nodiscard]] inline ProbabilityMatrix normalize_cooccurrence(const CooccurrenceMatrix& cm)
{
    const std::int64_t total = cm.total();
    if (total == 0) {
        throw DivisionByZeroError("cannot normalize an all-zero co-occurrence matrix");
    }
    std::vector<double> probs(cm.counts().size());
    const auto denom = static_cast<double>(total);
    std::transform(cm.counts().begin(), cm.counts().end(), probs.begin(),
                   [denom](std::int64_t c) { return static_cast<double>(c) / denom; });
    return ProbabilityMatrix(cm.levels(), std::move(probs));
}

// Signed moment of the gray-level difference: sum P(i, j) (i - j)^degree.
[[nodiscard]] inline double moment(const ProbabilityMatrix& pm, int degree)
{
    if (degree < 1) {
        throw ConfigError("moment degree must be >= 1, got " + std::to_string(degree));
    }
    double sum = 0.0;
    for (int i = 0; i < pm.levels(); ++i) {
        for (int j = 0; j < pm.levels(); ++j) {
            const double p = pm.at(i, j);
            if (p == 0.0) {
                continue;
            }
            double term = 1.0;
            const auto diff = static_cast<double>(i - j);
            for (int k = 0; k < degree; ++k) {
                term *= diff;
            }
            sum += p * term;
        }
    }
    return sum;
}

// Longest scan line of a direction: width for 0°, height for 90°, the
// shorter side for the diagonals.
[[nodiscard]] constexpr int longest_scan_line(int width, int height, Direction d) noexcept
{
    switch (d) {
    case Direction::deg0: return width;
    case Direction::deg90: return height;
    default: return std::min(width, height);
    }
}

[[nodiscard]] inline RunLengthMatrix run_length_matrix(const GrayImage& image, Direction direction)
{
    RunLengthMatrix rlm(image.levels(), longest_scan_line(image.width(), image.height(), direction), direction);
    const Step step = scan_step(direction);
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            if (!image.in_roi(x, y)) {
                continue;
            }
            const int level = image.at(x, y);
            // A run starts where the predecessor along the scan line cannot extend it.
            const int px = x - step.dx;
            const int py = y - step.dy;
            if (image.in_roi(px, py) && image.at(px, py) == level) {
                continue;
            }
            int length = 1;
            int nx = x + step.dx;
            int ny = y + step.dy;
            while (image.in_roi(nx, ny) && image.at(nx, ny) == level) {
                ++length;
                nx += step.dx;
                ny += step.dy;
            }
            rlm.add_run(level, length);
        }
    }
    if (rlm.total_runs() == 0) {
        throw EmptyRunsError("no in-ROI pixel to scan at " + std::to_string(degrees(direction)) + " degrees");
    }
    return rlm;
}

// Gray-level non-uniformity: sum over levels of (runs of that level)^2, over total runs.
[[nodiscard]] inline double gray_level_non_uniformity(const RunLengthMatrix& rlm)
{
    const std::int64_t total = rlm.total_runs();
    if (total == 0) {
        throw EmptyRunsError("gray-level non-uniformity of a run-length matrix with no runs");
    }
    double numerator = 0.0;
    for (int i = 0; i < rlm.levels(); ++i) {
        const auto runs = static_cast<double>(rlm.runs_of_level(i));
        numerator += runs * runs;
    }
    return numerator / static_cast<double>(total);
}

// Run percentage: total runs over scanned area.
[[nodiscard]] inline double run_percentage(const RunLengthMatrix& rlm)
{
    if (rlm.n_pixels() == 0) {
        throw EmptyRunsError("run percentage over an empty area");
    }
    return static_cast<double>(rlm.total_runs()) / static_cast<double>(rlm.n_pixels());
}

// Builds the descriptor: first and third moments from the co-occurrence matrix at
// `offset`, then non-uniformity and run percentage for each of the four directions.
[[nodiscard]] inline FeatureVector extract_features(const GrayImage& image, Offset offset, std::string id,
                                                    Label label)
{
    try {
        if (image.roi_pixel_count() == 0) {
            throw EmptyRoiError("empty ROI");
        }
        FeatureVector fv;
        fv.id = id;
        fv.label = label;
        const ProbabilityMatrix pm = normalize_cooccurrence(cooccurrence(image, offset));
        fv.m1 = moment(pm, 1);
        fv.m3 = moment(pm, 3);
        for (std::size_t k = 0; k < kAllDirections.size(); ++k) {
            const RunLengthMatrix rlm = run_length_matrix(image, kAllDirections[k]);
            fv.gln[k] = gray_level_non_uniformity(rlm);
            fv.rp[k] = run_percentage(rlm);
        }
        return fv;
    } catch (const Error&) {
        detail::rethrow_with_context<EmptyRoiError, EmptyPairsError, EmptyRunsError, DivisionByZeroError>(id);
    }
}

} // namespace thermocad
