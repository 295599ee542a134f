#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <wqcascade/dataio.hpp>
#include <wqcascade/error.hpp>
#include <wqcascade/synth.hpp>

#include "fixtures.hpp"

using namespace wqcascade;

namespace {

std::string with_header(const std::string& body) { return std::string(kDatasetHeader) + "\n" + body; }

const std::string kRow = "1,KE,2015-07-01T08:00:00Z,31.5,22.1,24.0,512.3,1650.2,0,3.2,60,0\n";

}  // namespace

TEST(ParseDataset, EmptyBody) {
    const auto r = parse_dataset(with_header(""));
    EXPECT_TRUE(r.dataset.empty());
    EXPECT_TRUE(r.warnings.empty());
}

TEST(ParseDataset, SingleRow) {
    const auto r = parse_dataset(with_header(kRow));
    ASSERT_EQ(r.dataset.size(), 1u);
    const auto& m = r.dataset.records[0];
    EXPECT_EQ(m.id, 1u);
    EXPECT_EQ(m.station, "KE");
    EXPECT_EQ(m.ecoli, 60);
    EXPECT_DOUBLE_EQ(m.salinity, 31.5);
    EXPECT_DOUBLE_EQ(m.rain_7_14d, 3.2);
    EXPECT_FALSE(m.outlier);
    EXPECT_EQ(format_timestamp(m.timestamp), "2015-07-01T08:00:00Z");
}

TEST(ParseDataset, NegativeEcoliIsValidationErrorNamingLine) {
    const std::string bad = "2,KE,2015-07-02T08:00:00Z,31.5,22.1,24.0,512.3,1650.2,0,0,-5,0\n";
    try {
        parse_dataset(with_header(kRow + bad));
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
}

TEST(ParseDataset, MalformedCellIsParseErrorWithPosition) {
    const std::string bad = "2,KE,2015-07-02T08:00:00Z,salty,22.1,24.0,512.3,1650.2,0,0,5,0\n";
    try {
        parse_dataset(with_header(kRow + bad));
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
        EXPECT_EQ(e.column(), 4u);
    }
}

TEST(ParseDataset, WrongHeaderIsParseError) {
    EXPECT_THROW(parse_dataset(std::string("id,station\n1,KE\n")), ParseError);
}

TEST(ParseDataset, MissingRainfallDefaultsToZeroWithWarning) {
    const std::string row = "1,KE,2015-07-01T08:00:00Z,31.5,22.1,24.0,512.3,1650.2,,,60,0\n";
    const auto r = parse_dataset(with_header(row));
    ASSERT_EQ(r.dataset.size(), 1u);
    EXPECT_EQ(r.dataset.records[0].rain_4_7d, 0.0);
    EXPECT_EQ(r.dataset.records[0].rain_7_14d, 0.0);
    EXPECT_FALSE(r.warnings.empty());
}

TEST(ParseDataset, OtherMissingCellIsError) {
    const std::string row = "1,KE,2015-07-01T08:00:00Z,,22.1,24.0,512.3,1650.2,0,0,60,0\n";
    EXPECT_THROW(parse_dataset(with_header(row)), ParseError);
}

TEST(ParseDataset, DuplicateIdsRejected) {
    EXPECT_THROW(parse_dataset(with_header(kRow + kRow)), ValidationError);
}

TEST(ParseDataset, SalinityOutOfRangeRejected) {
    const std::string row = "1,KE,2015-07-01T08:00:00Z,45.5,22.1,24.0,512.3,1650.2,0,0,60,0\n";
    EXPECT_THROW(parse_dataset(with_header(row)), ValidationError);
}

TEST(ParseDataset, MissingFileIsIoError) {
    EXPECT_THROW(read_dataset_file("/nonexistent/wqcascade/data.csv"), IoError);
}

TEST(SerializeDataset, RoundTripIsIdentity) {
    auto cfg = SynthConfig::calibrated(5);
    const Dataset d = generate_dataset(cfg);
    const std::string text = serialize_dataset(d);
    const auto back = parse_dataset(text);
    ASSERT_EQ(back.dataset.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(back.dataset.records[i], d.records[i]) << i;
    EXPECT_EQ(serialize_dataset(back.dataset), text);
}

TEST(SerializeDataset, FileRoundTrip) {
    fixtures::TempDir dir;
    const Dataset d = fixtures::from_ecoli({5, 150, 151});
    write_dataset_file(dir / "d.csv", d);
    const auto back = read_dataset_file(dir / "d.csv");
    EXPECT_EQ(back.dataset.records, d.records);
}

TEST(RemoveOutliers, DropsExactlyFlagged) {
    Dataset d = fixtures::from_ecoli({1, 2, 3, 4, 5, 6});
    d.records[1].outlier = true;
    d.records[4].outlier = true;
    const Dataset original = d;
    const Dataset kept = remove_outliers(d);
    ASSERT_EQ(kept.size(), 4u);
    for (const auto& m : kept.records) EXPECT_FALSE(m.outlier);
    EXPECT_EQ(d.records, original.records);
}

TEST(RemoveOutliers, NoneAndAllFlagged) {
    Dataset d = fixtures::from_ecoli({1, 2, 3});
    EXPECT_EQ(remove_outliers(d).records, d.records);
    for (auto& m : d.records) m.outlier = true;
    EXPECT_TRUE(remove_outliers(d).empty());
}

TEST(RemoveOutliers, CalibratedSynthKeeps1133) {
    const Dataset d = generate_dataset(SynthConfig::calibrated());
    std::size_t flagged = 0;
    for (const auto& m : d.records) flagged += m.outlier ? 1 : 0;
    EXPECT_EQ(flagged, 4u);
    EXPECT_EQ(remove_outliers(d).size(), 1133u);
}

TEST(StationStats, SingleRecord) {
    Dataset d = fixtures::from_ecoli({60});
    d.records[0].salinity = 32.0;
    const auto s = station_stats(d);
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s[0].n, 1u);
    EXPECT_DOUBLE_EQ(s[0].ecoli_mean, 60);
    EXPECT_DOUBLE_EQ(s[0].ecoli_median, 60);
    EXPECT_DOUBLE_EQ(s[0].salinity_mean, 32);
    EXPECT_DOUBLE_EQ(s[0].salinity_median, 32);
}

TEST(StationStats, FourRecordHandExample) {
    const auto s = station_stats(fixtures::from_ecoli({0, 10, 20, 30}));
    ASSERT_EQ(s.size(), 1u);
    EXPECT_DOUBLE_EQ(s[0].ecoli_mean, 15);
    EXPECT_DOUBLE_EQ(s[0].ecoli_median, 15);
}

TEST(StationStats, SortedByCodeAndBounded) {
    const Dataset d = generate_dataset(SynthConfig::calibrated(3));
    const auto stats = station_stats(d);
    ASSERT_EQ(stats.size(), 9u);
    for (std::size_t i = 1; i < stats.size(); ++i) EXPECT_LT(stats[i - 1].station, stats[i].station);
    for (const auto& s : stats) {
        std::int64_t lo = INT64_MAX;
        std::int64_t hi = 0;
        std::size_t n = 0;
        for (const auto& m : d.records) {
            if (m.station != s.station) continue;
            lo = std::min(lo, m.ecoli);
            hi = std::max(hi, m.ecoli);
            ++n;
        }
        EXPECT_EQ(n, s.n);
        EXPECT_GE(s.ecoli_median, static_cast<double>(lo));
        EXPECT_LE(s.ecoli_median, static_cast<double>(hi));
        EXPECT_LE(std::abs(s.ecoli_mean - s.ecoli_median), static_cast<double>(hi - lo));
    }
}

TEST(Label, BoundaryIsBelow) {
    const auto l = label(fixtures::from_ecoli({5, 150, 151}), 150, default_features());
    EXPECT_EQ(l.labels, (std::vector<Label>{Label::Below, Label::Below, Label::Above}));
    EXPECT_EQ(l.rows(), 3u);
}

TEST(Label, LimitAtMaxGivesNoAbove) {
    const auto l = label(fixtures::from_ecoli({3, 99, 42}), 99, default_features());
    EXPECT_EQ(l.count(Label::Above), 0u);
}

TEST(Label, FeatureOrderAndUnknownName) {
    const Dataset d = fixtures::from_ecoli({10});
    const std::vector<std::string> names{"ghi", "salinity"};
    const auto l = label(d, 100, names);
    EXPECT_EQ(l.feature_names, names);
    EXPECT_DOUBLE_EQ(l.at(0, 0), d.records[0].ghi);
    EXPECT_DOUBLE_EQ(l.at(0, 1), d.records[0].salinity);
    const std::vector<std::string> bad{"enterococci"};
    EXPECT_THROW(label(d, 100, bad), ConfigError);
}

TEST(Label, AboveCountNonIncreasingInLimit) {
    const Dataset d = generate_dataset(SynthConfig::calibrated(2));
    std::size_t previous = d.size() + 1;
    for (double limit : {1.0, 10.0, 50.0, 100.0, 150.0, 250.0, 1000.0, 5000.0}) {
        const std::size_t above = label(d, limit, default_features()).count(Label::Above);
        EXPECT_LE(above, previous);
        previous = above;
    }
}
