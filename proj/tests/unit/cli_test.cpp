#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include <wqcascade/dataio.hpp>

#include "cli.hpp"
#include "fixtures.hpp"

using namespace wqcascade;
using wqcascade::cli::run_command;

namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_command(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::directory_iterator(dir)) files[e.path().filename().string()] = slurp(e.path());
    return files;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (line.back() == ',') cells.emplace_back();
        rows.push_back(std::move(cells));
    }
    return rows;
}

/// Calibrated synthetic data written once per test process.
const fs::path& synthetic_csv() {
    static fixtures::TempDir dir;
    static const fs::path path = [] {
        const auto r = run({"synth", "--out", dir.path().string()});
        EXPECT_EQ(r.code, 0) << r.err;
        return dir / "synthetic.csv";
    }();
    return path;
}

}  // namespace

TEST(Cli, UsageErrors) {
    EXPECT_EQ(run({}).code, 1);
    EXPECT_EQ(run({"frobnicate"}).code, 1);
    EXPECT_EQ(run({"ingest", "--no-such-flag"}).code, 1);
    const auto help = run({"--help"});
    EXPECT_EQ(help.code, 0);
    EXPECT_NE(help.out.find("train-cascade"), std::string::npos);
}

TEST(Cli, IngestMalformedCsvIsInvalid) {
    fixtures::TempDir dir;
    std::ofstream(dir / "bad.csv") << kDatasetHeader << "\n1,KE,2015-07-01T08:00:00Z,31,22,24,500,1600,0,0,sixty,0\n";
    const auto r = run({"ingest", "--data", (dir / "bad.csv").string(), "--out", (dir / "o").string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
}

TEST(Cli, MissingInputIsIoError) {
    fixtures::TempDir dir;
    const auto r = run({"ingest", "--data", (dir / "absent.csv").string(), "--out", (dir / "o").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("absent.csv"), std::string::npos);
    EXPECT_EQ(run({"ingest", "--config", (dir / "absent.ini").string()}).code, 2);
}

TEST(Cli, ConflictingSourcesAreInvalid) {
    fixtures::TempDir dir;
    EXPECT_EQ(run({"ingest", "--synth", "--data", synthetic_csv().string(), "--out", dir.path().string()}).code, 1);
    EXPECT_EQ(run({"ingest", "--out", dir.path().string()}).code, 1);
}

TEST(Cli, SynthAndIngest) {
    const auto parsed = read_dataset_file(synthetic_csv());
    EXPECT_EQ(parsed.dataset.size(), 1137u);
    fixtures::TempDir dir;
    const auto r = run({"ingest", "--data", synthetic_csv().string(), "--out", dir.path().string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("outliers removed 4"), std::string::npos) << r.out;
    EXPECT_NE(r.err.find("config_hash="), std::string::npos);
    for (const char* f : {"station_stats.csv", "station_stats.json", "station_stats.md", "config.ini", "manifest.json"}) {
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    }
    const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    EXPECT_EQ(manifest["command"], "ingest");
    EXPECT_EQ(manifest["files"].size(), 4u);
    EXPECT_EQ(csv_rows(slurp(dir / "station_stats.csv")).size(), 10u);
}

TEST(Cli, SplitWritesPartition) {
    fixtures::TempDir dir;
    const auto r = run({"split", "--data", synthetic_csv().string(), "--out", dir.path().string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(read_dataset_file(dir / "train.csv").dataset.size(), 907u);
    EXPECT_EQ(read_dataset_file(dir / "test.csv").dataset.size(), 226u);
}

TEST(Cli, TrainCascadeThenClassifyAtThetaZero) {
    fixtures::TempDir dir;
    ASSERT_EQ(run({"split", "--data", synthetic_csv().string(), "--out", (dir / "split").string()}).code, 0);
    const std::string train = (dir / "split" / "train.csv").string();
    const auto t = run({"train-cascade", "--data", train, "--estimators", "20", "--seed", "3", "--out",
                        (dir / "model").string()});
    ASSERT_EQ(t.code, 0) << t.err;
    const auto c = run({"classify", "--data", train, "--model", (dir / "model" / "cascade.json").string(), "--theta",
                        "0", "--out", (dir / "classify").string()});
    ASSERT_EQ(c.code, 0) << c.err;
    const auto rows = csv_rows(slurp(dir / "classify" / "predictions.csv"));
    ASSERT_EQ(rows.size(), 908u);
    EXPECT_EQ(rows[0][3], "verdict");
    for (std::size_t i = 1; i < rows.size(); ++i) {
        EXPECT_EQ(rows[i][3], "EXCELLENT");
        EXPECT_EQ(rows[i][4], "1");
    }
}

TEST(Cli, EvaluateUnsatisfiableThreshold) {
    fixtures::TempDir dir;
    ASSERT_EQ(run({"train-cascade", "--data", synthetic_csv().string(), "--split", "uniform:k=5,offset=4",
                   "--estimators", "10", "--out", (dir / "model").string()})
                  .code,
              0);
    const auto r = run({"evaluate", "--data", synthetic_csv().string(), "--model",
                        (dir / "model" / "cascade.json").string(), "--theta", "1.01", "--out",
                        (dir / "eval").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(slurp(dir / "eval" / "cascade_eval.json"));
    EXPECT_EQ(j["n_test"], 226);
    EXPECT_EQ(j["suspects"], 226);
    EXPECT_EQ(j["true_positive"], 0);
    EXPECT_EQ(j["false_negative"], 0);
}

TEST(Cli, OutputsAreReproducibleAndCarryProvenance) {
    fixtures::TempDir dir;
    const std::vector<std::string> args{"train-cascade", "--synth", "--estimators", "8", "--seed", "11", "--out",
                                        dir.path().string()};
    ASSERT_EQ(run(args).code, 0);
    const auto first = snapshot(dir.path());
    ASSERT_EQ(run(args).code, 0);
    EXPECT_EQ(snapshot(dir.path()), first);

    const auto manifest = nlohmann::json::parse(first.at("manifest.json"));
    const std::string hash = manifest["config_hash"];
    const auto model = nlohmann::json::parse(first.at("cascade.json"));
    EXPECT_EQ(model["provenance"]["config_hash"], hash);
    EXPECT_EQ(model["provenance"]["seed"], 11);
}

TEST(Cli, ThreadCountDoesNotChangeResults) {
    fixtures::TempDir dir;
    for (const char* threads : {"1", "8"}) {
        const auto r = run({"train-cascade", "--synth", "--estimators", "12", "--seed", "5", "--threads", threads,
                            "--out", (dir / threads).string()});
        ASSERT_EQ(r.code, 0) << r.err;
    }
    auto a = snapshot(dir / "1");
    auto b = snapshot(dir / "8");
    EXPECT_EQ(a.at("cascade.json"), b.at("cascade.json"));
    EXPECT_EQ(a.at("manifest.json"), b.at("manifest.json"));
}

TEST(Cli, FlagsOverrideConfigFile) {
    fixtures::TempDir dir;
    std::ofstream(dir / "run.ini") << "[model]\nestimators = 3\nmax_depth = 4\n[run]\nseed = 9\n";
    const auto r = run({"train-single", "--synth", "--config", (dir / "run.ini").string(), "--estimators", "5",
                        "--out", (dir / "o").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto forest = nlohmann::json::parse(slurp(dir / "o" / "forest.json"));
    EXPECT_EQ(forest["trees"].size(), 5u);
    const std::string echoed = slurp(dir / "o" / "config.ini");
    EXPECT_NE(echoed.find("estimators = 5"), std::string::npos);
    EXPECT_NE(echoed.find("max_depth = 4"), std::string::npos);
    EXPECT_NE(echoed.find("seed = 9"), std::string::npos);
}

TEST(Cli, EvaluateSingleAndCascadeExperiments) {
    fixtures::TempDir dir;
    auto r = run({"evaluate", "--synth", "--kind", "single", "--estimators", "10", "--n-runs", "2", "--limit", "150",
                  "--out", (dir / "single").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(dir / "single" / "single_report.md"));
    r = run({"evaluate", "--synth", "--estimators", "10", "--n-runs", "2", "--policy", "all", "--formats", "csv",
             "--out", (dir / "cascade").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = csv_rows(slurp(dir / "cascade" / "cascade_summary.csv"));
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[1][0], "configured");
    EXPECT_FALSE(fs::exists(dir / "cascade" / "cascade_summary.json"));
}

TEST(Cli, SweepWritesPlot) {
    fixtures::TempDir dir;
    const auto r = run({"sweep", "--synth", "--estimators", "10", "--n-runs", "2", "--limits", "20,60,150", "--out",
                        dir.path().string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const std::string svg = slurp(dir / "sweep.svg");
    EXPECT_NE(svg.find("series-accuracy"), std::string::npos);
    EXPECT_EQ(csv_rows(slurp(dir / "sweep.csv")).size(), 4u);
    EXPECT_EQ(run({"sweep", "--synth", "--limits", "60,20", "--out", dir.path().string()}).code, 1);
}

TEST(Cli, SweepAutoLimitsArePositive) {
    fixtures::TempDir dir;
    const auto r = run({"sweep", "--synth", "--estimators", "5", "--n-runs", "1", "--out", dir.path().string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = csv_rows(slurp(dir / "sweep.csv"));
    ASSERT_GE(rows.size(), 3u);
    for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_GT(std::stod(rows[i][0]), 0.0);
}

TEST(Cli, ClassifyWithForest) {
    fixtures::TempDir dir;
    ASSERT_EQ(run({"train-single", "--data", synthetic_csv().string(), "--estimators", "5", "--out",
                   (dir / "m").string()})
                  .code,
              0);
    const auto r = run({"classify", "--data", synthetic_csv().string(), "--model", (dir / "m" / "forest.json").string(),
                        "--out", (dir / "c").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = csv_rows(slurp(dir / "c" / "predictions.csv"));
    EXPECT_EQ(rows[0], (std::vector<std::string>{"id", "station", "ecoli", "prediction", "p_below"}));
    EXPECT_EQ(rows.size(), 1134u);
}
