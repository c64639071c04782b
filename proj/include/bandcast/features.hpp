#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "bandcast/spatial.hpp"

namespace bandcast {

// The seven engineered KPIs, in canonical index order.
constexpr int kNumKpis = 7;
extern const std::array<const char*, kNumKpis> kKpiNames;

struct KpiVector {
    double traffic_volume = 0;     // avg_ul + avg_dl
    double latency_ratio = 0;      // min_latency / mean_latency
    double tx_rx_ratio = 0;        // sum_bytes_tx / max(sum_bytes_rx, 1)
    double norm_connections = 0;   // connection_count / unique_devices
    double signal_strength = 0;    // mean_signal
    double jitter_variability = 0; // avg_jitter - min_jitter
    double sum_throughput = 0;     // sum_bytes_tx + sum_bytes_rx

    double operator[](int i) const {
        switch (i) {
            case 0: return traffic_volume;
            case 1: return latency_ratio;
            case 2: return tx_rx_ratio;
            case 3: return norm_connections;
            case 4: return signal_strength;
            case 5: return jitter_variability;
            default: return sum_throughput;
        }
    }
};

// rx_floored, when given, is set if the 1-byte denominator floor engaged.
KpiVector compute_kpis(const CellAggregate& cell, bool* rx_floored = nullptr);

struct PanelRow {
    TileId tile;
    int window = 0;
    std::vector<double> x;  // KPI-major lag columns, see FeaturePanel::columns
    double target = 0;      // proxy deployed_bw_mhz at lag 0
};

struct ColumnStats {
    double mean = 0;
    double std = 0;       // population convention; 0 marks a degenerate column
    bool zero_variance = false;
};

struct FeaturePanel {
    std::vector<int> lags;                 // e.g. {0, 1, 2}
    std::vector<std::string> columns;      // "<kpi>_lag<k>", KPI-major
    std::vector<PanelRow> rows;            // sorted by (tile.row, tile.col, window)
    // Standardization metadata, filled by standardize_per_window:
    // stats[window][column]. Composed so the inverse transform is exact.
    std::vector<std::vector<ColumnStats>> stats;
    bool standardized = false;

    int column_index(const std::string& name) const;
};

// Collapses bands by sample-count-weighted mean, joins KPIs to the proxy on
// (tile, window), and emits one row per (tile, t) whose lagged antecedents
// all exist. Throws ConfigError when n_windows < max(lags) + 2.
FeaturePanel build_panel(const std::vector<CellAggregate>& cells,
                         const std::vector<ProxyTarget>& proxy, const std::vector<int>& lags,
                         int n_windows);

// Zero mean / unit population variance per (window, column); target is left
// alone. Degenerate columns become all-zero and are flagged in the stats.
void standardize_per_window(FeaturePanel& panel);

// Sample Pearson correlation, clamped to [-1, 1]. Throws when both series
// are constant; returns 0 when exactly one is (no measurable association).
double pearson(const std::vector<double>& x, const std::vector<double>& y);

struct CorrelationEntry {
    std::string kpi;
    int lag = 0;
    double r = 0;
    int64_t n = 0;
};

struct CorrelationReport {
    std::vector<CorrelationEntry> by_kpi_lag;  // pooled across tiles and windows
    // Inter-dataset alignment: per-KPI Pearson between tile-level KPI means
    // (lag 0) and tile-level proxy means, across tiles.
    std::vector<CorrelationEntry> alignment;
};

CorrelationReport correlation_report(const FeaturePanel& panel);

// Sample autocorrelation (acf[0] = 1) and partial autocorrelation via the
// Durbin-Levinson recursion (pacf[0] = 1 by convention). Throws on a
// constant series or when the series is too short.
void acf_pacf(const std::vector<double>& series, int max_lag, std::vector<double>& acf,
              std::vector<double>& pacf);

}  // namespace bandcast
