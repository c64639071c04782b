#include "bandcast/benchreport.hpp"

#include <algorithm>
#include <filesystem>
#include <map>

#include "bandcast/csv.hpp"
#include "bandcast/errors.hpp"
#include "bandcast/sha256.hpp"
#include "json.hpp"

namespace bandcast {

std::vector<BenchmarkRow> compare_benchmarks(const std::vector<YearValue>& actuals,
                                             const std::vector<YearValue>& predictions,
                                             const ItuBenchmarks& bench) {
    if (actuals.empty()) throw ConfigError("compare_benchmarks: no actuals");
    if (bench.vanilla_high <= 0 || bench.vanilla_low <= 0 || bench.modernized_high <= 0 ||
        bench.modernized_low <= 0)
        throw ConfigError("benchmarks must be positive");
    if (bench.vanilla_high < bench.vanilla_low || bench.modernized_high < bench.modernized_low)
        throw ConfigError("high-density benchmark below low-density");

    std::map<int, double> pred;
    for (const auto& p : predictions) pred[p.year] = p.mhz;

    const std::pair<const char*, double> names[4] = {
        {"vanilla_high", bench.vanilla_high},
        {"vanilla_low", bench.vanilla_low},
        {"modernized_high", bench.modernized_high},
        {"modernized_low", bench.modernized_low},
    };

    std::vector<BenchmarkRow> out;
    for (const auto& a : actuals) {
        auto it = pred.find(a.year);
        double p = (it != pred.end()) ? it->second : 0.0;
        for (const auto& [name, value] : names) {
            BenchmarkRow r;
            r.year = a.year;
            r.actual_mhz = a.mhz;
            r.predicted_mhz = p;
            r.benchmark = name;
            r.benchmark_mhz = value;
            r.deviation = (a.mhz - value) / value;
            r.overpredicts = a.mhz < value;
            out.push_back(r);
        }
    }
    return out;
}

namespace {

struct Bundle {
    std::string dir;
    nlohmann::json files = nlohmann::json::object();
    std::vector<std::string> omitted;

    void add(const std::string& rel, const std::string& content) {
        std::filesystem::path p = std::filesystem::path(dir) / rel;
        std::filesystem::create_directories(p.parent_path());
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + p.string());
        out << content;
        out.close();
        if (!out) throw IoError("write failed: " + p.string());
        files[rel] = {{"sha256", sha256_hex(content)}, {"bytes", content.size()}};
    }
};

std::string csv_text(const std::vector<std::string>& header,
                     const std::vector<std::vector<std::string>>& rows) {
    std::string out;
    for (size_t i = 0; i < header.size(); ++i) {
        if (i) out += ',';
        out += header[i];
    }
    out += '\n';
    for (const auto& r : rows) {
        for (size_t i = 0; i < r.size(); ++i) {
            if (i) out += ',';
            out += r[i];
        }
        out += '\n';
    }
    return out;
}

}  // namespace

std::string emit_report(const ReportInputs& inputs, const std::string& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create report directory " + out_dir);

    Bundle bundle;
    bundle.dir = out_dir;
    std::vector<std::string> summary;

    if (inputs.metrics && !inputs.metrics->empty()) {
        std::vector<std::vector<std::string>> rows;
        for (const auto& m : *inputs.metrics)
            rows.push_back({m.model, m.scenario, format_double(m.metrics.rmse),
                            format_double(m.metrics.nrmse), format_double(m.metrics.r2),
                            format_double(m.metrics.accuracy)});
        bundle.add("metrics.csv",
                   csv_text({"model", "scenario", "rmse", "nrmse", "r2", "accuracy"}, rows));
        const MetricsRow* best = nullptr;
        for (const auto& m : *inputs.metrics)
            if (!best || m.metrics.accuracy > best->metrics.accuracy) best = &m;
        summary.push_back("best model: " + best->model + " (" + best->scenario + ") accuracy " +
                          format_double(best->metrics.accuracy) + ", nrmse " +
                          format_double(best->metrics.nrmse) + " [metrics.csv]");
    } else {
        bundle.omitted.push_back("metrics.csv");
    }

    if (inputs.correlations &&
        (!inputs.correlations->by_kpi_lag.empty() || !inputs.correlations->alignment.empty())) {
        std::vector<std::vector<std::string>> rows;
        for (const auto& e : inputs.correlations->by_kpi_lag)
            rows.push_back({"pooled", e.kpi, std::to_string(e.lag), format_double(e.r),
                            std::to_string(e.n)});
        for (const auto& e : inputs.correlations->alignment)
            rows.push_back({"alignment", e.kpi, std::to_string(e.lag), format_double(e.r),
                            std::to_string(e.n)});
        bundle.add("correlations.csv", csv_text({"kind", "kpi", "lag", "pearson", "n"}, rows));
        const CorrelationEntry* top = nullptr;
        for (const auto& e : inputs.correlations->by_kpi_lag)
            if (!top || std::abs(e.r) > std::abs(top->r)) top = &e;
        if (top)
            summary.push_back("strongest correlation: " + top->kpi + " lag " +
                              std::to_string(top->lag) + " pearson " + format_double(top->r) +
                              " [correlations.csv]");
    } else {
        bundle.omitted.push_back("correlations.csv");
    }

    if (inputs.benchmark && !inputs.benchmark->empty()) {
        std::vector<std::vector<std::string>> rows;
        for (const auto& b : *inputs.benchmark)
            rows.push_back({std::to_string(b.year), format_double(b.actual_mhz),
                            format_double(b.predicted_mhz), b.benchmark,
                            format_double(b.benchmark_mhz), format_double(b.deviation),
                            b.overpredicts ? "1" : "0"});
        bundle.add("benchmark_comparison.csv",
                   csv_text({"year", "actual_mhz", "predicted_mhz", "benchmark", "benchmark_mhz",
                             "deviation", "overpredicts"},
                            rows));
        const BenchmarkRow& last = inputs.benchmark->back();
        summary.push_back("latest benchmark gap: year " + std::to_string(last.year) + " vs " +
                          last.benchmark + " deviation " + format_double(last.deviation) +
                          " [benchmark_comparison.csv]");
    } else {
        bundle.omitted.push_back("benchmark_comparison.csv");
    }

    if (inputs.transfer && !inputs.transfer->empty()) {
        std::vector<std::vector<std::string>> rows;
        std::vector<double> reductions;
        for (const auto& t : *inputs.transfer) {
            rows.push_back({t.source, t.target, format_double(t.target_fraction),
                            std::to_string(t.seed), format_double(t.nrmse_with),
                            format_double(t.nrmse_without), format_double(t.reduction)});
            reductions.push_back(t.reduction);
        }
        bundle.add("transfer_report.csv",
                   csv_text({"source", "target", "target_fraction", "seed", "nrmse_with",
                             "nrmse_without", "reduction"},
                            rows));
        std::sort(reductions.begin(), reductions.end());
        double median = reductions[reductions.size() / 2];
        // The median of an even count is reported as the upper-middle order
        // statistic so the quoted value always appears verbatim in the CSV.
        summary.push_back("median transfer nrmse reduction: " + format_double(median) +
                          " over " + std::to_string(reductions.size()) +
                          " runs [transfer_report.csv]");
    } else {
        bundle.omitted.push_back("transfer_report.csv");
    }

    for (const auto& p : inputs.plots)
        bundle.add("plots/" + p.filename, csv_text(p.header, p.rows));

    std::string summary_text;
    for (const auto& line : summary) summary_text += line + "\n";
    if (summary.empty()) summary_text = "no stage inputs were provided\n";
    bundle.add("summary.txt", summary_text);

    nlohmann::json manifest;
    manifest["files"] = bundle.files;
    manifest["omitted"] = bundle.omitted;
    manifest["config_hash"] = inputs.config_hash;
    std::string manifest_text = manifest.dump(2) + "\n";

    std::filesystem::path mp = std::filesystem::path(out_dir) / "manifest.json";
    std::ofstream mout(mp, std::ios::binary | std::ios::trunc);
    if (!mout) throw IoError("cannot write " + mp.string());
    mout << manifest_text;
    mout.close();
    if (!mout) throw IoError("write failed: " + mp.string());
    return manifest_text;
}

}  // namespace bandcast
