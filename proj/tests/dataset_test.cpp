#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "deskpilot/dataset.hpp"
#include "deskpilot/rng.hpp"

namespace dp = deskpilot;
namespace fs = std::filesystem;

namespace {

dp::Dataset synthetic_dataset(int n, std::uint64_t seed, double zero_fraction = 0.4) {
    dp::Dataset ds;
    dp::Rng rng(seed);
    for (int i = 0; i < n; ++i) {
        dp::DrivingSample s;
        s.timestamp = i * 0.5;
        s.center = "frames/" + std::to_string(i) + "_c.ppm";
        s.left = "frames/" + std::to_string(i) + "_l.ppm";
        s.right = "frames/" + std::to_string(i) + "_r.ppm";
        s.steering = rng.uniform() < zero_fraction ? 0.0 : rng.uniform(-1.0, 1.0);
        s.throttle = rng.uniform(0.0, 1.0);
        s.brake = 0.0;
        s.speed = rng.uniform(0.0, 30.0);
        ds.samples.push_back(s);
    }
    return ds;
}

}  // namespace

TEST(Manifest, WriteThenLoadRoundTrips) {
    const auto dir = fs::temp_directory_path() / "dp_dataset_test";
    fs::create_directories(dir);
    const auto path = dir / "manifest.csv";
    dp::Dataset ds = synthetic_dataset(50, 3);
    ds.samples[7].left.clear();  // absent optional frame
    ds.samples[7].right.clear();
    dp::write_manifest(path, ds);
    const dp::Dataset back = dp::load_manifest(path);
    ASSERT_EQ(back.samples.size(), ds.samples.size());
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        EXPECT_EQ(back.samples[i].center, ds.samples[i].center);
        EXPECT_EQ(back.samples[i].left, ds.samples[i].left);
        EXPECT_NEAR(back.samples[i].steering, ds.samples[i].steering, 1e-9);
        EXPECT_NEAR(back.samples[i].speed, ds.samples[i].speed, 1e-9);
    }
    EXPECT_EQ(back.root, dir);
    fs::remove_all(dir);
}

TEST(Manifest, RejectsMalformedRowsWithRowNumbers) {
    const auto dir = fs::temp_directory_path() / "dp_dataset_bad";
    fs::create_directories(dir);
    const auto write = [&](const std::string& body) {
        const auto p = dir / "m.csv";
        std::ofstream out(p);
        out << dp::kManifestHeader << "\n" << body;
        return p;
    };
    // steering outside [-1, 1]; the first data row lives on file line 2
    auto p = write("0.0,c.ppm,,,1.5,0,0,10\n");
    try {
        dp::load_manifest(p);
        FAIL() << "expected throw";
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos) << e.what();
    }
    // missing center frame
    p = write("0.0,,,,0.1,0,0,10\n");
    EXPECT_THROW(dp::load_manifest(p), std::runtime_error);
    // wrong column count
    p = write("0.0,c.ppm,0.1\n");
    EXPECT_THROW(dp::load_manifest(p), std::runtime_error);
    // non-numeric field
    p = write("0.0,c.ppm,,,abc,0,0,10\n");
    EXPECT_THROW(dp::load_manifest(p), std::runtime_error);
    // negative speed
    p = write("0.0,c.ppm,,,0.1,0,0,-2\n");
    EXPECT_THROW(dp::load_manifest(p), std::runtime_error);
    // bad header
    {
        const auto q = dir / "h.csv";
        std::ofstream out(q);
        out << "time,center\n";
        out.close();
        EXPECT_THROW(dp::load_manifest(q), std::runtime_error);
    }
    fs::remove_all(dir);
}

TEST(SteeringBin, CoversRangeAndClamps) {
    EXPECT_EQ(dp::steering_bin(-1.0, 25), 0);
    EXPECT_EQ(dp::steering_bin(1.0, 25), 24);  // right edge clamps into last bin
    EXPECT_EQ(dp::steering_bin(0.0, 25), 12);  // zero lands in the middle bin
    EXPECT_EQ(dp::steering_bin(-1.0 + 2.0 / 25.0 + 1e-12, 25), 1);
}

TEST(Split, TrainSideIsExactlyFloorOfRatio) {
    for (int n : {10, 37, 100, 312, 1001}) {
        const dp::Dataset ds = synthetic_dataset(n, 11);
        for (double ratio : {0.5, 0.8, 0.73}) {
            const auto [train, val] = dp::split(ds, ratio, 5);
            EXPECT_EQ(train.samples.size(),
                      static_cast<std::size_t>(std::floor(n * ratio)));
            EXPECT_EQ(train.samples.size() + val.samples.size(), static_cast<std::size_t>(n));
        }
    }
}

TEST(Split, StratifiedPerBinQuotas) {
    const dp::Dataset ds = synthetic_dataset(500, 13);
    const auto [train, val] = dp::split(ds, 0.8, 7);
    const auto full = dp::steering_histogram(ds);
    const auto tr = dp::steering_histogram(train);
    for (std::size_t b = 0; b < full.size(); ++b) {
        // every bin contributes floor or floor+1 of its share
        EXPECT_GE(tr[b], static_cast<long long>(std::floor(full[b] * 0.8)));
        EXPECT_LE(tr[b], static_cast<long long>(std::floor(full[b] * 0.8)) + 1);
    }
}

TEST(Split, DeterministicAndSeedSensitive) {
    const dp::Dataset ds = synthetic_dataset(200, 17);
    const auto [a_train, a_val] = dp::split(ds, 0.8, 42);
    const auto [b_train, b_val] = dp::split(ds, 0.8, 42);
    ASSERT_EQ(a_train.samples.size(), b_train.samples.size());
    for (std::size_t i = 0; i < a_train.samples.size(); ++i)
        EXPECT_EQ(a_train.samples[i].center, b_train.samples[i].center);
    const auto [c_train, c_val] = dp::split(ds, 0.8, 43);
    bool differs = false;
    for (std::size_t i = 0; i < a_train.samples.size() && !differs; ++i)
        differs = a_train.samples[i].center != c_train.samples[i].center;
    EXPECT_TRUE(differs);
}

TEST(Split, PreservesOriginalOrderWithinSides) {
    const dp::Dataset ds = synthetic_dataset(120, 19);
    const auto [train, val] = dp::split(ds, 0.8, 3);
    const auto ordered = [](const dp::Dataset& d) {
        for (std::size_t i = 1; i < d.samples.size(); ++i)
            if (d.samples[i].timestamp <= d.samples[i - 1].timestamp) return false;
        return true;
    };
    EXPECT_TRUE(ordered(train));
    EXPECT_TRUE(ordered(val));
}

TEST(Split, RejectsDegenerateInputs) {
    const dp::Dataset ds = synthetic_dataset(10, 1);
    EXPECT_THROW(dp::split(ds, 0.0, 1), std::invalid_argument);
    EXPECT_THROW(dp::split(ds, 1.0, 1), std::invalid_argument);
    dp::Dataset tiny = synthetic_dataset(1, 1);
    EXPECT_THROW(dp::split(tiny, 0.8, 1), std::runtime_error);
}

TEST(Balance, RemovesRoundOfRateTimesZeroCount) {
    const dp::Dataset ds = synthetic_dataset(400, 23, 0.5);
    long long zeros = 0;
    for (const auto& s : ds.samples)
        if (std::abs(s.steering) <= 1e-6) ++zeros;
    for (double rate : {0.0, 0.3, 0.7, 0.8, 1.0}) {
        dp::BalanceConfig cfg;
        cfg.deletion_rate = rate;
        dp::Rng rng(9);
        const dp::Dataset out = dp::balance_zero_steer(ds, cfg, rng);
        EXPECT_EQ(ds.samples.size() - out.samples.size(),
                  static_cast<std::size_t>(std::llround(zeros * rate)));
    }
}

TEST(Balance, OnlyZeroSteerRowsRemovedOrderPreserved) {
    const dp::Dataset ds = synthetic_dataset(300, 29, 0.5);
    dp::BalanceConfig cfg;
    cfg.deletion_rate = 0.8;
    dp::Rng rng(4);
    const dp::Dataset out = dp::balance_zero_steer(ds, cfg, rng);
    // all non-zero rows survive, in order
    std::vector<double> want, got;
    for (const auto& s : ds.samples)
        if (std::abs(s.steering) > 1e-6) want.push_back(s.timestamp);
    for (const auto& s : out.samples)
        if (std::abs(s.steering) > 1e-6) got.push_back(s.timestamp);
    EXPECT_EQ(got, want);
    double prev = -1.0;
    for (const auto& s : out.samples) {
        EXPECT_GT(s.timestamp, prev);
        prev = s.timestamp;
    }
}

TEST(Balance, FullRateEmptiesZeroBinOnly) {
    const dp::Dataset ds = synthetic_dataset(200, 31, 0.4);
    dp::BalanceConfig cfg;
    cfg.deletion_rate = 1.0;
    dp::Rng rng(2);
    const dp::Dataset out = dp::balance_zero_steer(ds, cfg, rng);
    for (const auto& s : out.samples) EXPECT_GT(std::abs(s.steering), 1e-6);
}

TEST(Steps, PinnedReferenceValuesExact) {
    EXPECT_EQ(dp::train_steps(9680, 256, 64), 2420);
    EXPECT_EQ(dp::train_steps(40728, 256, 64), 10182);
    EXPECT_EQ(dp::train_steps(20376, 256, 64), 5094);
    EXPECT_EQ(dp::validation_steps(2421, 256), 10);
    EXPECT_EQ(dp::validation_steps(10183, 256), 40);
    EXPECT_EQ(dp::validation_steps(5094, 256), 20);
}

TEST(Steps, CeilingBehaviorAndValidation) {
    EXPECT_EQ(dp::train_steps(1, 256, 64), 1);
    EXPECT_EQ(dp::train_steps(4, 256, 64), 1);
    EXPECT_EQ(dp::train_steps(5, 256, 64), 2);  // 320/256 rounds up
    EXPECT_EQ(dp::validation_steps(256, 256), 1);
    EXPECT_EQ(dp::validation_steps(257, 256), 2);
    EXPECT_THROW(dp::train_steps(0, 256, 64), std::invalid_argument);
    EXPECT_THROW(dp::validation_steps(10, 0), std::invalid_argument);
}
