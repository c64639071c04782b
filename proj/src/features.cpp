#include "bandcast/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "bandcast/errors.hpp"

namespace bandcast {

const std::array<const char*, kNumKpis> kKpiNames = {
    "traffic_volume", "latency_ratio",      "tx_rx_ratio",   "norm_connections",
    "signal_strength", "jitter_variability", "sum_throughput"};

KpiVector compute_kpis(const CellAggregate& cell, bool* rx_floored) {
    KpiVector k;
    k.traffic_volume = cell.avg_ul + cell.avg_dl;
    k.latency_ratio = cell.min_latency / cell.mean_latency;
    double rx = cell.sum_bytes_rx;
    if (rx < 1.0) {
        rx = 1.0;  // declared floor: one byte
        if (rx_floored) *rx_floored = true;
    }
    k.tx_rx_ratio = cell.sum_bytes_tx / rx;
    k.norm_connections = cell.connection_count / cell.unique_devices;
    k.signal_strength = cell.mean_signal;
    k.jitter_variability = cell.avg_jitter - cell.min_jitter;
    k.sum_throughput = cell.sum_bytes_tx + cell.sum_bytes_rx;
    return k;
}

int FeaturePanel::column_index(const std::string& name) const {
    for (size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return static_cast<int>(i);
    throw ConfigError("unknown panel column: " + name);
}

FeaturePanel build_panel(const std::vector<CellAggregate>& cells,
                         const std::vector<ProxyTarget>& proxy, const std::vector<int>& lags,
                         int n_windows) {
    if (lags.empty()) throw ConfigError("empty lag set");
    for (size_t i = 0; i + 1 < lags.size(); ++i)
        if (lags[i] >= lags[i + 1]) throw ConfigError("lags must be sorted and distinct");
    if (lags.front() < 0) throw ConfigError("negative lag");
    int max_lag = lags.back();
    if (n_windows < max_lag + 2)
        throw ConfigError("too few windows to form any training pair: need at least " +
                          std::to_string(max_lag + 2));

    // Collapse bands: sample-count-weighted mean of per-band KPI vectors.
    struct WeightedKpis {
        std::array<double, kNumKpis> sum{};
        double weight = 0;
    };
    std::map<std::tuple<int, int, int>, WeightedKpis> by_tile_window;
    for (const auto& c : cells) {
        KpiVector k = compute_kpis(c);
        auto& acc = by_tile_window[{c.tile.row, c.tile.col, c.window}];
        for (int i = 0; i < kNumKpis; ++i) acc.sum[i] += k[i] * c.sample_count;
        acc.weight += c.sample_count;
    }
    std::map<std::tuple<int, int, int>, std::array<double, kNumKpis>> kpi_at;
    for (const auto& [key, acc] : by_tile_window) {
        if (acc.weight <= 0) continue;  // zero-sample cells carry no KPI signal
        std::array<double, kNumKpis> v;
        for (int i = 0; i < kNumKpis; ++i) v[i] = acc.sum[i] / acc.weight;
        kpi_at[key] = v;
    }

    std::map<std::tuple<int, int, int>, double> proxy_at;
    for (const auto& p : proxy) proxy_at[{p.tile.row, p.tile.col, p.window}] = p.deployed_bw_mhz;

    FeaturePanel panel;
    panel.lags = lags;
    for (int i = 0; i < kNumKpis; ++i)
        for (int lag : lags)
            panel.columns.push_back(std::string(kKpiNames[i]) + "_lag" + std::to_string(lag));

    // kpi_at iterates in (row, col, window) order, which is the canonical row
    // order for the panel.
    for (const auto& [key, v0] : kpi_at) {
        auto [row, col, t] = key;
        auto pit = proxy_at.find(key);
        if (pit == proxy_at.end()) continue;
        bool complete = true;
        PanelRow r;
        r.tile = {row, col};
        r.window = t;
        r.x.reserve(panel.columns.size());
        for (int i = 0; i < kNumKpis && complete; ++i) {
            for (int lag : lags) {
                auto it = kpi_at.find({row, col, t - lag});
                if (t - lag < 0 || it == kpi_at.end()) {
                    complete = false;
                    break;
                }
                r.x.push_back(it->second[i]);
            }
        }
        if (!complete) continue;
        r.target = pit->second;
        panel.rows.push_back(std::move(r));
    }
    return panel;
}

void standardize_per_window(FeaturePanel& panel) {
    size_t ncol = panel.columns.size();
    int max_window = 0;
    for (const auto& r : panel.rows) max_window = std::max(max_window, r.window);
    panel.stats.assign(static_cast<size_t>(max_window + 1), std::vector<ColumnStats>(ncol));

    std::map<int, std::vector<PanelRow*>> by_window;
    for (auto& r : panel.rows) by_window[r.window].push_back(&r);

    for (auto& [w, rows] : by_window) {
        double n = static_cast<double>(rows.size());
        for (size_t c = 0; c < ncol; ++c) {
            double m1 = 0;
            for (auto* r : rows) m1 += r->x[c];
            m1 /= n;
            double ss = 0;
            for (auto* r : rows) ss += (r->x[c] - m1) * (r->x[c] - m1);
            double s1 = std::sqrt(ss / n);  // population convention
            ColumnStats& st = panel.stats[w][c];
            if (s1 == 0.0) {
                st = {m1, 0.0, true};
                for (auto* r : rows) r->x[c] = 0.0;
                continue;
            }
            for (auto* r : rows) r->x[c] = (r->x[c] - m1) / s1;
            // Second pass absorbs the first pass's rounding so the group hits
            // mean 0 / std 1 to tight tolerance; the composed transform is
            // stored for the inverse.
            double m2 = 0;
            for (auto* r : rows) m2 += r->x[c];
            m2 /= n;
            double ss2 = 0;
            for (auto* r : rows) ss2 += (r->x[c] - m2) * (r->x[c] - m2);
            double s2 = std::sqrt(ss2 / n);
            if (s2 == 0.0) s2 = 1.0;
            for (auto* r : rows) r->x[c] = (r->x[c] - m2) / s2;
            st = {m1 + m2 * s1, s1 * s2, false};
        }
    }
    panel.standardized = true;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw NumericError("pearson: bad series lengths");
    double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 && syy == 0.0) throw NumericError("pearson undefined: both series constant");
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrelationReport correlation_report(const FeaturePanel& panel) {
    if (panel.rows.empty()) throw NumericError("correlation report on empty panel");
    CorrelationReport rep;
    std::vector<double> target;
    target.reserve(panel.rows.size());
    for (const auto& r : panel.rows) target.push_back(r.target);

    for (int i = 0; i < kNumKpis; ++i) {
        for (size_t li = 0; li < panel.lags.size(); ++li) {
            size_t col = static_cast<size_t>(i) * panel.lags.size() + li;
            std::vector<double> x;
            x.reserve(panel.rows.size());
            for (const auto& r : panel.rows) x.push_back(r.x[col]);
            rep.by_kpi_lag.push_back(
                {kKpiNames[i], panel.lags[li], pearson(x, target),
                 static_cast<int64_t>(panel.rows.size())});
        }
    }

    // Alignment: per-tile means of the lag-0 column against per-tile mean
    // proxy, one point per tile.
    std::map<std::pair<int, int>, std::pair<std::vector<size_t>, int>> tiles;
    for (size_t ri = 0; ri < panel.rows.size(); ++ri)
        tiles[{panel.rows[ri].tile.row, panel.rows[ri].tile.col}].first.push_back(ri);
    if (tiles.size() >= 2) {
        std::vector<double> proxy_mean;
        for (const auto& [tk, idx] : tiles) {
            double s = 0;
            for (size_t ri : idx.first) s += panel.rows[ri].target;
            proxy_mean.push_back(s / static_cast<double>(idx.first.size()));
        }
        size_t lag0 = 0;
        bool have_lag0 = false;
        for (size_t li = 0; li < panel.lags.size(); ++li)
            if (panel.lags[li] == 0) {
                lag0 = li;
                have_lag0 = true;
            }
        if (have_lag0) {
            for (int i = 0; i < kNumKpis; ++i) {
                size_t col = static_cast<size_t>(i) * panel.lags.size() + lag0;
                std::vector<double> kpi_mean;
                for (const auto& [tk, idx] : tiles) {
                    double s = 0;
                    for (size_t ri : idx.first) s += panel.rows[ri].x[col];
                    kpi_mean.push_back(s / static_cast<double>(idx.first.size()));
                }
                double r = 0;
                try {
                    r = pearson(kpi_mean, proxy_mean);
                } catch (const NumericError&) {
                    continue;  // degenerate tile means; skip the row
                }
                rep.alignment.push_back({kKpiNames[i], 0, r, static_cast<int64_t>(tiles.size())});
            }
        }
    }
    return rep;
}

void acf_pacf(const std::vector<double>& series, int max_lag, std::vector<double>& acf,
              std::vector<double>& pacf) {
    int n = static_cast<int>(series.size());
    if (n <= max_lag + 1) throw NumericError("series too short for requested lags");
    double mean = 0;
    for (double v : series) mean += v;
    mean /= n;
    double denom = 0;
    for (double v : series) denom += (v - mean) * (v - mean);
    if (denom == 0.0) throw NumericError("acf undefined for constant series");

    acf.assign(max_lag + 1, 0.0);
    acf[0] = 1.0;
    for (int k = 1; k <= max_lag; ++k) {
        double s = 0;
        for (int t = k; t < n; ++t) s += (series[t] - mean) * (series[t - k] - mean);
        acf[k] = s / denom;
    }

    // Durbin-Levinson: phi[k][k] is the partial autocorrelation at lag k.
    pacf.assign(max_lag + 1, 0.0);
    pacf[0] = 1.0;
    if (max_lag == 0) return;
    std::vector<double> phi_prev(max_lag + 1, 0.0), phi(max_lag + 1, 0.0);
    phi_prev[1] = acf[1];
    pacf[1] = acf[1];
    double err = 1.0 - acf[1] * acf[1];
    for (int k = 2; k <= max_lag; ++k) {
        double num = acf[k];
        for (int j = 1; j < k; ++j) num -= phi_prev[j] * acf[k - j];
        if (err <= 0.0) throw NumericError("Durbin-Levinson breakdown: non-positive error term");
        double phikk = num / err;
        phi = phi_prev;
        phi[k] = phikk;
        for (int j = 1; j < k; ++j) phi[j] = phi_prev[j] - phikk * phi_prev[k - j];
        err *= (1.0 - phikk * phikk);
        pacf[k] = phikk;
        phi_prev = phi;
    }
}

}  // namespace bandcast
