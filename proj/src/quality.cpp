#include "bandcast/quality.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include "bandcast/csv.hpp"
#include "bandcast/errors.hpp"

namespace bandcast {

double quantile_type7(std::vector<double> values, double p) {
    if (values.empty()) throw NumericError("quantile of empty set");
    std::sort(values.begin(), values.end());
    double h = p * static_cast<double>(values.size() - 1);
    size_t lo = static_cast<size_t>(std::floor(h));
    if (lo + 1 >= values.size()) return values.back();
    double frac = h - static_cast<double>(lo);
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

std::vector<double> interpolate_gaps(const std::vector<std::optional<double>>& series,
                                     const CleansePolicy& policy) {
    size_t n = series.size();
    size_t present = 0;
    for (const auto& v : series)
        if (v) ++present;
    if (present == 0) throw NumericError("all-missing series");

    std::vector<double> out(n, 0.0);
    for (size_t i = 0; i < n; ++i)
        if (series[i]) out[i] = *series[i];

    size_t i = 0;
    while (i < n) {
        if (series[i]) {
            ++i;
            continue;
        }
        size_t j = i;
        while (j + 1 < n && !series[j + 1]) ++j;
        size_t run = j - i + 1;
        bool has_prev = i > 0;
        bool has_next = j + 1 < n;

        if (run <= static_cast<size_t>(policy.max_short_gap)) {
            if (has_prev && has_next) {
                double a = *series[i - 1], b = *series[j + 1];
                double span = static_cast<double>(j + 1 - (i - 1));
                for (size_t k = i; k <= j; ++k)
                    out[k] = a + (b - a) * static_cast<double>(k - (i - 1)) / span;
            } else if (has_next) {
                for (size_t k = i; k <= j; ++k) out[k] = *series[j + 1];  // backward fill
            } else {
                for (size_t k = i; k <= j; ++k) out[k] = *series[i - 1];  // forward fill
            }
        } else {
            // Long gap: average the ma_window present values nearest to each
            // position, growing the radius symmetrically. Values at equal
            // distance both count, so the estimate stays centered.
            for (size_t k = i; k <= j; ++k) {
                double sum = 0;
                int cnt = 0;
                for (size_t r = 1; r < n && cnt < policy.ma_window; ++r) {
                    if (k >= r && series[k - r]) {
                        sum += *series[k - r];
                        ++cnt;
                    }
                    if (k + r < n && series[k + r]) {
                        sum += *series[k + r];
                        ++cnt;
                    }
                }
                out[k] = sum / static_cast<double>(cnt);
            }
        }
        i = j + 1;
    }
    return out;
}

std::vector<uint8_t> detect_outliers(const std::vector<double>& series,
                                     const CleansePolicy& policy) {
    size_t n = series.size();
    std::vector<uint8_t> mask(n, 0);
    if (n < 2) return mask;

    double q1 = quantile_type7(series, 0.25);
    double q3 = quantile_type7(series, 0.75);
    double iqr = q3 - q1;
    double lo = q1 - policy.iqr_k * iqr;
    double hi = q3 + policy.iqr_k * iqr;

    double mean = 0;
    for (double v : series) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0;
    for (double v : series) ss += (v - mean) * (v - mean);
    double sd = std::sqrt(ss / static_cast<double>(n - 1));

    for (size_t i = 0; i < n; ++i) {
        bool iqr_flag = series[i] < lo || series[i] > hi;
        bool z_flag = sd > 0 && std::abs(series[i] - mean) / sd > policy.z_thresh;
        mask[i] = (iqr_flag || z_flag) ? 1 : 0;
    }
    return mask;
}

std::vector<double> winsorize(const std::vector<double>& series, const std::vector<uint8_t>& mask,
                              const CleansePolicy& policy) {
    std::vector<double> keep;
    for (size_t i = 0; i < series.size(); ++i)
        if (!mask[i]) keep.push_back(series[i]);
    if (keep.empty()) throw NumericError("all values flagged; nothing to winsorize against");

    double lo = quantile_type7(keep, policy.winsor_lower_pct / 100.0);
    double hi = quantile_type7(keep, policy.winsor_upper_pct / 100.0);

    std::vector<double> out = series;
    for (size_t i = 0; i < series.size(); ++i)
        if (mask[i]) out[i] = std::clamp(series[i], lo, hi);
    return out;
}

namespace {

struct FieldRef {
    const char* name;
    double CellAggregate::* member;
};

constexpr std::array<FieldRef, 12> kFields = {{
    {"avg_ul", &CellAggregate::avg_ul},
    {"avg_dl", &CellAggregate::avg_dl},
    {"min_latency", &CellAggregate::min_latency},
    {"mean_latency", &CellAggregate::mean_latency},
    {"avg_jitter", &CellAggregate::avg_jitter},
    {"min_jitter", &CellAggregate::min_jitter},
    {"sum_bytes_tx", &CellAggregate::sum_bytes_tx},
    {"sum_bytes_rx", &CellAggregate::sum_bytes_rx},
    {"mean_signal", &CellAggregate::mean_signal},
    {"connection_count", &CellAggregate::connection_count},
    {"unique_devices", &CellAggregate::unique_devices},
    {"sample_count", &CellAggregate::sample_count},
}};

}  // namespace

std::vector<CellAggregate> cleanse_cells(const std::vector<CellAggregate>& cells, int n_windows,
                                         const CleansePolicy& policy,
                                         std::vector<CleanseLogEntry>* log) {
    // Group by (tile, band); remember which windows are present.
    std::map<std::tuple<int, int, std::string>, std::map<int, CellAggregate>> groups;
    for (const auto& c : cells)
        groups[{c.tile.row, c.tile.col, c.band}][c.window] = c;

    std::vector<CellAggregate> out;
    for (auto& [key, by_window] : groups) {
        std::string key_str = "r" + std::to_string(std::get<0>(key)) + "c" +
                              std::to_string(std::get<1>(key)) + "|" + std::get<2>(key);

        // Dense skeleton, one row per window; identity fields filled now.
        std::vector<CellAggregate> dense(static_cast<size_t>(n_windows));
        for (int w = 0; w < n_windows; ++w) {
            dense[w].tile = {std::get<0>(key), std::get<1>(key)};
            dense[w].band = std::get<2>(key);
            dense[w].window = w;
        }

        std::vector<uint8_t> was_present(static_cast<size_t>(n_windows), 0);
        for (const auto& [w, c] : by_window)
            if (w >= 0 && w < n_windows) was_present[w] = 1;

        for (const auto& f : kFields) {
            std::vector<std::optional<double>> series(static_cast<size_t>(n_windows));
            for (const auto& [w, c] : by_window)
                if (w >= 0 && w < n_windows) series[w] = c.*(f.member);

            std::vector<double> filled = interpolate_gaps(series, policy);
            if (log) {
                for (int w = 0; w < n_windows; ++w)
                    if (!was_present[w]) {
                        // Reconstruct which path filled it for the audit log.
                        int a = w, b = w;
                        while (a > 0 && !was_present[a - 1]) --a;
                        while (b + 1 < n_windows && !was_present[b + 1]) ++b;
                        const char* action =
                            (b - a + 1) <= policy.max_short_gap ? "interpolate" : "ma_fill";
                        log->push_back({key_str, w, action, "", filled[w]});
                    }
            }

            std::vector<uint8_t> mask = detect_outliers(filled, policy);
            std::vector<double> treated = winsorize(filled, mask, policy);
            if (log) {
                for (int w = 0; w < n_windows; ++w)
                    if (mask[w] && treated[w] != filled[w])
                        log->push_back({key_str, w, "winsorize", format_double(filled[w]),
                                        treated[w]});
            }
            for (int w = 0; w < n_windows; ++w) dense[w].*(f.member) = treated[w];
        }
        for (auto& c : dense) out.push_back(std::move(c));
    }
    return out;
}

}  // namespace bandcast
