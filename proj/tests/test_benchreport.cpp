#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "bandcast/benchreport.hpp"
#include "bandcast/errors.hpp"
#include "bandcast/sha256.hpp"
#include "json.hpp"

using namespace bandcast;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

fs::path fresh_dir(const std::string& tag) {
    fs::path p = fs::temp_directory_path() / ("bandcast_report_" + tag);
    fs::remove_all(p);
    return p;
}

ItuBenchmarks flat(double v) {
    ItuBenchmarks b;
    b.vanilla_high = b.vanilla_low = b.modernized_high = b.modernized_low = v;
    b.reference_year = 2020;
    return b;
}

}  // namespace

// ------------------------------------------------------------ comparisons

TEST_CASE("deviation is the exact relative gap against each benchmark") {
    std::vector<YearValue> actuals = {{2020, 60.0}};
    auto rows = compare_benchmarks(actuals, {}, flat(100.0));
    REQUIRE(rows.size() == 4);  // one per benchmark figure
    for (const auto& r : rows) {
        CHECK(r.deviation == -0.40);
        CHECK(r.overpredicts);  // actual sits below the benchmark
        CHECK(r.actual_mhz == 60.0);
        CHECK(r.benchmark_mhz == 100.0);
        CHECK(r.predicted_mhz == 0.0);  // no prediction supplied for 2020
    }
    CHECK(rows[0].benchmark == "vanilla_high");
    CHECK(rows[1].benchmark == "vanilla_low");
    CHECK(rows[2].benchmark == "modernized_high");
    CHECK(rows[3].benchmark == "modernized_low");

    CHECK(compare_benchmarks({{2021, 100.0}}, {}, flat(100.0))[0].deviation == 0.0);
    CHECK(compare_benchmarks({{2021, 85.0}}, {}, flat(100.0))[0].deviation == -0.15);
    CHECK(compare_benchmarks({{2021, 130.0}}, {}, flat(100.0))[0].deviation == 0.30);
}

TEST_CASE("overpredicts flips only when the actual falls below the figure") {
    ItuBenchmarks b;
    b.vanilla_high = 120.0;
    b.vanilla_low = 80.0;
    b.modernized_high = 100.0;
    b.modernized_low = 90.0;
    auto rows = compare_benchmarks({{2022, 100.0}}, {}, b);
    CHECK(rows[0].overpredicts);         // 100 < 120
    CHECK_FALSE(rows[1].overpredicts);   // 100 > 80
    CHECK_FALSE(rows[2].overpredicts);   // equal is not an overprediction
    CHECK_FALSE(rows[3].overpredicts);
}

TEST_CASE("predictions are matched to their year") {
    std::vector<YearValue> actuals = {{2020, 50.0}, {2021, 70.0}};
    std::vector<YearValue> preds = {{2021, 66.0}};
    auto rows = compare_benchmarks(actuals, preds, flat(100.0));
    REQUIRE(rows.size() == 8);
    CHECK(rows[0].year == 2020);
    CHECK(rows[0].predicted_mhz == 0.0);
    CHECK(rows[4].year == 2021);
    CHECK(rows[4].predicted_mhz == 66.0);
}

TEST_CASE("benchmark validation") {
    CHECK_THROWS_AS(compare_benchmarks({}, {}, flat(100.0)), ConfigError);
    CHECK_THROWS_AS(compare_benchmarks({{2020, 1.0}}, {}, flat(0.0)), ConfigError);
    CHECK_THROWS_AS(compare_benchmarks({{2020, 1.0}}, {}, flat(-5.0)), ConfigError);
    ItuBenchmarks inverted = flat(100.0);
    inverted.vanilla_low = 150.0;  // low-density figure above high-density
    CHECK_THROWS_AS(compare_benchmarks({{2020, 1.0}}, {}, inverted), ConfigError);
}

// ------------------------------------------------------------ report bundle

namespace {

struct Fixture {
    std::vector<MetricsRow> metrics;
    CorrelationReport correlations;
    std::vector<BenchmarkRow> benchmark;
    std::vector<TransferRow> transfer;
    ReportInputs inputs;

    Fixture() {
        MetricsRow ols;
        ols.model = "ols";
        ols.scenario = "default";
        ols.metrics = {2.0, 0.9, 0.1, 0.90};
        MetricsRow gbm;
        gbm.model = "gbm";
        gbm.scenario = "default";
        gbm.metrics = {3.0, 0.8, 0.2, 0.80};
        metrics = {ols, gbm};

        correlations.by_kpi_lag = {{"traffic_volume", 1, 0.82, 40},
                                   {"latency_ratio", 0, -0.91, 42}};
        correlations.alignment = {{"traffic_volume", 0, 0.5, 9}};

        benchmark = compare_benchmarks({{2023, 60.0}}, {{2023, 58.0}}, flat(100.0));

        transfer = {{"a", "b", 0.25, 1, 0.17, 0.20, 0.15},
                    {"a", "b", 0.25, 2, 0.30, 0.40, 0.25},
                    {"a", "b", 0.25, 3, 0.36, 0.40, 0.10},
                    {"a", "b", 0.25, 4, 0.28, 0.40, 0.30}};

        PlotSeries plot;
        plot.filename = "proxy_growth.csv";
        plot.header = {"window", "mhz"};
        plot.rows = {{"0", "50"}, {"1", "52.5"}};
        inputs.metrics = &metrics;
        inputs.correlations = &correlations;
        inputs.benchmark = &benchmark;
        inputs.transfer = &transfer;
        inputs.plots = {plot};
        inputs.config_hash = "deadbeef";
    }
};

}  // namespace

TEST_CASE("emit_report writes every bundle file and an honest manifest") {
    Fixture f;
    fs::path dir = fresh_dir("full");
    std::string manifest_text = emit_report(f.inputs, dir.string());

    auto manifest = nlohmann::json::parse(manifest_text);
    CHECK(manifest["config_hash"] == "deadbeef");
    CHECK(manifest["omitted"].empty());
    for (const char* name : {"metrics.csv", "correlations.csv", "benchmark_comparison.csv",
                             "transfer_report.csv", "plots/proxy_growth.csv", "summary.txt"}) {
        REQUIRE(manifest["files"].contains(name));
        std::string body = slurp(dir / name);
        CHECK(manifest["files"][name]["sha256"] == sha256_hex(body));
        CHECK(manifest["files"][name]["bytes"] == body.size());
    }
    CHECK(slurp(dir / "manifest.json") == manifest_text);

    std::string bench_csv = slurp(dir / "benchmark_comparison.csv");
    CHECK(bench_csv.find("year,actual_mhz,predicted_mhz,benchmark,benchmark_mhz,deviation,"
                         "overpredicts") == 0);
    CHECK(bench_csv.find("2023,60,58,vanilla_high,100,-0.4,1") != std::string::npos);

    std::string summary = slurp(dir / "summary.txt");
    CHECK(summary.find("best model: ols") != std::string::npos);
    CHECK(summary.find("strongest correlation: latency_ratio lag 0") != std::string::npos);
    // median over an even count is the upper-middle order statistic
    CHECK(summary.find("median transfer nrmse reduction: 0.25 over 4 runs") !=
          std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("reruns of the same inputs are byte-identical") {
    Fixture f;
    fs::path a = fresh_dir("rerun_a");
    fs::path b = fresh_dir("rerun_b");
    std::string ma = emit_report(f.inputs, a.string());
    std::string mb = emit_report(f.inputs, b.string());
    CHECK(ma == mb);
    for (const char* name : {"metrics.csv", "correlations.csv", "benchmark_comparison.csv",
                             "transfer_report.csv", "plots/proxy_growth.csv", "summary.txt",
                             "manifest.json"})
        CHECK(slurp(a / name) == slurp(b / name));
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("omitted inputs are recorded instead of silently skipped") {
    ReportInputs inputs;
    inputs.config_hash = "cafe";
    fs::path dir = fresh_dir("omitted");
    auto manifest = nlohmann::json::parse(emit_report(inputs, dir.string()));

    std::vector<std::string> omitted = manifest["omitted"];
    REQUIRE(omitted.size() == 4);
    CHECK(omitted[0] == "metrics.csv");
    CHECK(omitted[1] == "correlations.csv");
    CHECK(omitted[2] == "benchmark_comparison.csv");
    CHECK(omitted[3] == "transfer_report.csv");
    CHECK(slurp(dir / "summary.txt") == "no stage inputs were provided\n");
    CHECK_FALSE(fs::exists(dir / "metrics.csv"));
    fs::remove_all(dir);
}

TEST_CASE("an empty vector counts as omitted too") {
    std::vector<MetricsRow> empty_metrics;
    ReportInputs inputs;
    inputs.metrics = &empty_metrics;
    fs::path dir = fresh_dir("empty_vec");
    auto manifest = nlohmann::json::parse(emit_report(inputs, dir.string()));
    std::vector<std::string> omitted = manifest["omitted"];
    CHECK(std::find(omitted.begin(), omitted.end(), "metrics.csv") != omitted.end());
    fs::remove_all(dir);
}
