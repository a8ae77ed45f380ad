#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "deskpilot/driving_sample.hpp"
#include "deskpilot/rng.hpp"

namespace deskpilot {

// An ordered collection of demonstration records. Frame references inside
// samples are relative to `root` (the directory the manifest lives in).
struct Dataset {
    std::vector<DrivingSample> samples;
    BehaviorTag behavior_tag = BehaviorTag::simplistic;
    std::filesystem::path root;

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }

    std::filesystem::path frame_path(const std::string& ref) const { return root / ref; }
};

// Controls the per-pass deletion of zero-steer samples. deletion_rate is the
// fraction lambda of the zero-steer population removed each pass; samples
// with |steering| <= zero_epsilon count as zero-steer.
struct BalanceConfig {
    double deletion_rate = 0.0;
    double zero_epsilon = 1e-6;

    void validate() const {
        if (!(deletion_rate >= 0.0 && deletion_rate <= 1.0))
            throw std::invalid_argument("BalanceConfig: deletion_rate outside [0,1]");
        if (!(zero_epsilon >= 0.0))
            throw std::invalid_argument("BalanceConfig: zero_epsilon < 0");
    }
};

inline constexpr int kSteeringHistogramBins = 25;

namespace detail {

inline std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    cells.push_back(cur);
    return cells;
}

inline double parse_number(const std::string& cell, const char* field, std::size_t row) {
    std::size_t consumed = 0;
    double v = 0.0;
    try {
        v = std::stod(cell, &consumed);
    } catch (const std::exception&) {
        throw std::runtime_error("manifest row " + std::to_string(row) + ": " + field +
                                 " is not numeric: '" + cell + "'");
    }
    if (consumed != cell.size())
        throw std::runtime_error("manifest row " + std::to_string(row) + ": " + field +
                                 " has trailing junk: '" + cell + "'");
    return v;
}

}  // namespace detail

inline constexpr const char* kManifestHeader =
    "timestamp,center,left,right,steering,throttle,brake,speed";

// Reads a demonstration manifest (UTF-8 CSV, one sample per row). Frame
// references stay relative; an empty cell means the camera was absent.
// Throws with the offending 1-based row number on any malformed row.
inline Dataset load_manifest(const std::filesystem::path& path,
                             BehaviorTag tag = BehaviorTag::simplistic) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_manifest: cannot open " + path.string());
    Dataset ds;
    ds.behavior_tag = tag;
    ds.root = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_manifest: empty file " + path.string());
    {
        auto header = detail::split_csv_row(line);
        auto expected = detail::split_csv_row(kManifestHeader);
        if (header != expected)
            throw std::runtime_error("load_manifest: unexpected header in " + path.string() +
                                     ": '" + line + "'");
    }
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        auto cells = detail::split_csv_row(line);
        if (cells.size() != 8)
            throw std::runtime_error("manifest row " + std::to_string(row) + ": expected 8 columns, got " +
                                     std::to_string(cells.size()));
        DrivingSample s;
        s.timestamp = detail::parse_number(cells[0], "timestamp", row);
        s.center = cells[1];
        s.left = cells[2];
        s.right = cells[3];
        s.steering = detail::parse_number(cells[4], "steering", row);
        s.throttle = detail::parse_number(cells[5], "throttle", row);
        s.brake = detail::parse_number(cells[6], "brake", row);
        s.speed = detail::parse_number(cells[7], "speed", row);
        if (s.center.empty())
            throw std::runtime_error("manifest row " + std::to_string(row) + ": center frame missing");
        if (!(s.steering >= -1.0 && s.steering <= 1.0))
            throw std::runtime_error("manifest row " + std::to_string(row) + ": steering " +
                                     cells[4] + " outside [-1,1]");
        if (!(s.throttle >= 0.0 && s.throttle <= 1.0))
            throw std::runtime_error("manifest row " + std::to_string(row) + ": throttle outside [0,1]");
        if (!(s.brake >= 0.0 && s.brake <= 1.0))
            throw std::runtime_error("manifest row " + std::to_string(row) + ": brake outside [0,1]");
        if (!(s.speed >= 0.0))
            throw std::runtime_error("manifest row " + std::to_string(row) + ": speed < 0");
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

// Writes samples in the manifest format load_manifest reads back.
inline void write_manifest(const std::filesystem::path& path, const Dataset& ds) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_manifest: cannot open " + path.string());
    out << kManifestHeader << '\n';
    // max_digits10 so every double survives the text round trip exactly
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const auto& s : ds.samples) {
        out << s.timestamp << ',' << s.center << ',' << s.left << ',' << s.right << ','
            << s.steering << ',' << s.throttle << ',' << s.brake << ',' << s.speed << '\n';
    }
    if (!out) throw std::runtime_error("write_manifest: write failed for " + path.string());
}

// Histogram bin of a normalized steering value over [-1, 1].
inline int steering_bin(double steering, int bins) {
    const int idx = static_cast<int>(std::floor((steering + 1.0) / 2.0 * bins));
    return std::clamp(idx, 0, bins - 1);
}

// Per-bin sample counts over [-1, 1]. Order-invariant in the samples.
inline std::vector<long long> steering_histogram(const Dataset& ds,
                                                 int bins = kSteeringHistogramBins) {
    if (bins < 1) throw std::invalid_argument("steering_histogram: bins >= 1");
    std::vector<long long> counts(static_cast<std::size_t>(bins), 0);
    for (const auto& s : ds.samples) ++counts[steering_bin(s.steering, bins)];
    return counts;
}

// Deterministic train/validation partition, stratified over 25 uniform
// steering bins so both sides keep the steering distribution. The train side
// gets exactly floor(n * ratio) samples; per-bin quotas are assigned by the
// largest-remainder rule and members are picked by a seeded shuffle.
inline std::pair<Dataset, Dataset> split(const Dataset& ds, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("split: ratio must be in (0,1)");
    const std::size_t n = ds.samples.size();
    if (n < 2) throw std::runtime_error("split: need at least 2 samples");

    std::vector<std::vector<std::size_t>> bins(kSteeringHistogramBins);
    for (std::size_t i = 0; i < n; ++i)
        bins[steering_bin(ds.samples[i].steering, kSteeringHistogramBins)].push_back(i);

    const auto train_total = static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratio));
    std::vector<std::size_t> quota(bins.size(), 0);
    std::vector<std::pair<double, std::size_t>> remainders;  // (fraction, bin)
    std::size_t assigned = 0;
    for (std::size_t b = 0; b < bins.size(); ++b) {
        const double want = static_cast<double>(bins[b].size()) * ratio;
        quota[b] = static_cast<std::size_t>(std::floor(want));
        assigned += quota[b];
        remainders.push_back({want - std::floor(want), b});
    }
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (std::size_t k = 0; assigned < train_total; ++k) {
        const std::size_t b = remainders[k % remainders.size()].second;
        if (quota[b] < bins[b].size()) {
            ++quota[b];
            ++assigned;
        }
    }

    Rng rng(seed);
    Dataset train{{}, ds.behavior_tag, ds.root};
    Dataset val{{}, ds.behavior_tag, ds.root};
    std::vector<char> to_train(n, 0);
    for (std::size_t b = 0; b < bins.size(); ++b) {
        auto& members = bins[b];
        for (std::size_t i = members.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
            std::swap(members[i - 1], members[j]);
        }
        for (std::size_t k = 0; k < quota[b]; ++k) to_train[members[k]] = 1;
    }
    for (std::size_t i = 0; i < n; ++i)
        (to_train[i] ? train : val).samples.push_back(ds.samples[i]);
    return {std::move(train), std::move(val)};
}

// Removes round(d * lambda) of the d zero-steer samples, chosen uniformly at
// random without replacement; everything else is untouched and order is
// preserved. Rounding is half-away-from-zero.
inline Dataset balance_zero_steer(const Dataset& ds, const BalanceConfig& cfg, Rng& rng) {
    cfg.validate();
    std::vector<std::size_t> zero_idx;
    for (std::size_t i = 0; i < ds.samples.size(); ++i)
        if (std::abs(ds.samples[i].steering) <= cfg.zero_epsilon) zero_idx.push_back(i);
    const auto d = static_cast<double>(zero_idx.size());
    const auto remove = static_cast<std::size_t>(std::llround(d * cfg.deletion_rate));

    std::vector<char> removed(ds.samples.size(), 0);
    // Partial Fisher-Yates: the first `remove` slots end up holding the victims.
    for (std::size_t k = 0; k < remove; ++k) {
        const auto j = k + static_cast<std::size_t>(rng.uniform_int(
                               0, static_cast<std::int64_t>(zero_idx.size() - k) - 1));
        std::swap(zero_idx[k], zero_idx[j]);
        removed[zero_idx[k]] = 1;
    }
    Dataset out{{}, ds.behavior_tag, ds.root};
    out.samples.reserve(ds.samples.size() - remove);
    for (std::size_t i = 0; i < ds.samples.size(); ++i)
        if (!removed[i]) out.samples.push_back(ds.samples[i]);
    return out;
}

// Steps per training epoch: ceil(n * chi / m) — every original sample is
// visited chi times per epoch through the augmentation stream.
inline long long train_steps(long long n, long long m, long long chi) {
    if (n < 1 || m < 1 || chi < 1) throw std::invalid_argument("train_steps: n, m, chi >= 1");
    return (n * chi + m - 1) / m;
}

// Steps per validation epoch: ceil(n / m); the last batch may be partial.
inline long long validation_steps(long long n, long long m) {
    if (n < 1 || m < 1) throw std::invalid_argument("validation_steps: n, m >= 1");
    return (n + m - 1) / m;
}

}  // namespace deskpilot
