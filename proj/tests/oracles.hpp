#pragma once

// Test-only reference implementations and fixtures. The oracles walk every
// candidate pixel pair or scan line explicitly and share no code with the
// library's counting paths.

#include <thermocad/imgio.hpp>
#include <thermocad/texture.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace thermocad::testing {

// Every (x, y) in the image, paired with (x + dx, y + dy) when that lies inside.
inline std::map<std::pair<int, int>, std::int64_t> brute_cooccurrence(const GrayImage& img, int dx, int dy)
{
    std::map<std::pair<int, int>, std::int64_t> counts;
    const auto& mask = img.mask();
    const auto inside = [&](int x, int y) {
        if (x < 0 || y < 0 || x >= img.width() || y >= img.height()) {
            return false;
        }
        return !mask || (*mask)[static_cast<std::size_t>(y * img.width() + x)];
    };
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            const int x2 = x + dx;
            const int y2 = y + dy;
            if (inside(x, y) && inside(x2, y2)) {
                const int i = img.pixels()[static_cast<std::size_t>(y * img.width() + x)];
                const int j = img.pixels()[static_cast<std::size_t>(y2 * img.width() + x2)];
                ++counts[{i, j}];
            }
        }
    }
    return counts;
}

// The coordinate sequences of every scan line for a direction, in scan order.
inline std::vector<std::vector<std::pair<int, int>>> scan_lines(int w, int h, Direction d)
{
    std::vector<std::vector<std::pair<int, int>>> lines;
    switch (d) {
    case Direction::deg0:
        for (int y = 0; y < h; ++y) {
            auto& line = lines.emplace_back();
            for (int x = 0; x < w; ++x) {
                line.emplace_back(x, y);
            }
        }
        break;
    case Direction::deg90:
        for (int x = 0; x < w; ++x) {
            auto& line = lines.emplace_back();
            for (int y = 0; y < h; ++y) {
                line.emplace_back(x, y);
            }
        }
        break;
    case Direction::deg45:
        // Anti-diagonals x + y = s, walked toward the upper right.
        for (int s = 0; s <= w + h - 2; ++s) {
            auto& line = lines.emplace_back();
            for (int y = h - 1; y >= 0; --y) {
                const int x = s - y;
                if (x >= 0 && x < w) {
                    line.emplace_back(x, y);
                }
            }
        }
        break;
    case Direction::deg135:
        // Diagonals x - y = s, walked toward the upper left.
        for (int s = -(h - 1); s <= w - 1; ++s) {
            auto& line = lines.emplace_back();
            for (int y = h - 1; y >= 0; --y) {
                const int x = s + y;
                if (x >= 0 && x < w) {
                    line.emplace_back(x, y);
                }
            }
        }
        break;
    }
    return lines;
}

// (level, length) -> number of maximal runs, splitting scan lines at ROI gaps.
inline std::map<std::pair<int, int>, std::int64_t> brute_runs(const GrayImage& img, Direction d)
{
    std::map<std::pair<int, int>, std::int64_t> runs;
    const auto& mask = img.mask();
    for (const auto& line : scan_lines(img.width(), img.height(), d)) {
        int current = -1;
        int length = 0;
        const auto flush = [&] {
            if (length > 0) {
                ++runs[{current, length}];
            }
            current = -1;
            length = 0;
        };
        for (const auto& [x, y] : line) {
            const auto idx = static_cast<std::size_t>(y * img.width() + x);
            if (mask && !(*mask)[idx]) {
                flush();
                continue;
            }
            const int v = img.pixels()[idx];
            if (length > 0 && v == current) {
                ++length;
            } else {
                flush();
                current = v;
                length = 1;
            }
        }
        flush();
    }
    return runs;
}

inline std::map<std::pair<int, int>, std::int64_t> nonzero_entries(const CooccurrenceMatrix& cm)
{
    std::map<std::pair<int, int>, std::int64_t> out;
    for (int i = 0; i < cm.levels(); ++i) {
        for (int j = 0; j < cm.levels(); ++j) {
            if (cm.at(i, j) != 0) {
                out[{i, j}] = cm.at(i, j);
            }
        }
    }
    return out;
}

inline std::map<std::pair<int, int>, std::int64_t> nonzero_entries(const RunLengthMatrix& rlm)
{
    std::map<std::pair<int, int>, std::int64_t> out;
    for (int i = 0; i < rlm.levels(); ++i) {
        for (int l = 1; l <= rlm.max_len(); ++l) {
            if (rlm.at(i, l) != 0) {
                out[{i, l}] = rlm.at(i, l);
            }
        }
    }
    return out;
}

// Random image; with `masked`, a random mask with at least one in-ROI pixel.
inline GrayImage random_image(std::mt19937_64& rng, int w, int h, int levels, bool masked)
{
    std::uniform_int_distribution<int> level(0, levels - 1);
    std::vector<std::uint16_t> px(static_cast<std::size_t>(w * h));
    for (auto& p : px) {
        p = static_cast<std::uint16_t>(level(rng));
    }
    GrayImage img(w, h, levels, std::move(px));
    if (!masked) {
        return img;
    }
    std::bernoulli_distribution keep(0.7);
    std::vector<bool> mask(static_cast<std::size_t>(w * h));
    for (std::size_t i = 0; i < mask.size(); ++i) {
        mask[i] = keep(rng);
    }
    mask[std::uniform_int_distribution<std::size_t>(0, mask.size() - 1)(rng)] = true;
    return img.with_mask(std::move(mask));
}

class TempDir {
public:
    TempDir()
    {
        static std::mt19937_64 rng{std::random_device{}()};
        path_ = std::filesystem::temp_directory_path() / ("thermocad-test-" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }
    [[nodiscard]] std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    out << content;
}

} // namespace thermocad::testing
