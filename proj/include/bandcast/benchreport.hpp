#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bandcast/features.hpp"
#include "bandcast/models.hpp"

namespace bandcast {

struct ItuBenchmarks {
    double vanilla_high = 0, vanilla_low = 0;
    double modernized_high = 0, modernized_low = 0;
    int reference_year = 0;
};

struct YearValue {
    int year = 0;
    double mhz = 0;
};

// One (year, benchmark) comparison; deviation = (actual - benchmark)/benchmark,
// negative when the benchmark over-predicts.
struct BenchmarkRow {
    int year = 0;
    double actual_mhz = 0;
    double predicted_mhz = 0;
    std::string benchmark;  // vanilla_high | vanilla_low | modernized_high | modernized_low
    double benchmark_mhz = 0;
    double deviation = 0;
    bool overpredicts = false;  // actual < benchmark
};

std::vector<BenchmarkRow> compare_benchmarks(const std::vector<YearValue>& actuals,
                                             const std::vector<YearValue>& predictions,
                                             const ItuBenchmarks& bench);

struct MetricsRow {
    std::string model;
    std::string scenario;
    Metrics metrics;
};

struct TransferRow {
    std::string source;
    std::string target;
    double target_fraction = 0;
    uint64_t seed = 0;
    double nrmse_with = 0;
    double nrmse_without = 0;
    double reduction = 0;
};

// x/y series for one plot file: header names double as axis labels.
struct PlotSeries {
    std::string filename;  // e.g. "proxy_growth.csv"
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;  // pre-formatted fields
};

// Inputs are optional (null = omitted); the manifest records omissions.
struct ReportInputs {
    const std::vector<MetricsRow>* metrics = nullptr;
    const CorrelationReport* correlations = nullptr;
    const std::vector<BenchmarkRow>* benchmark = nullptr;
    const std::vector<TransferRow>* transfer = nullptr;
    std::vector<PlotSeries> plots;
    std::string config_hash;
};

// Writes the report bundle into out_dir: manifest.json, summary.txt, the
// machine-readable CSVs present in the inputs, and plots/*.csv. Byte-identical
// for identical inputs. Returns the manifest's JSON text.
std::string emit_report(const ReportInputs& inputs, const std::string& out_dir);

}  // namespace bandcast
