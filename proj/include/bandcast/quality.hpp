#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bandcast/spatial.hpp"

namespace bandcast {

struct CleansePolicy {
    int max_short_gap = 1;      // windows; longer gaps use the moving-average path
    int ma_window = 3;          // present values averaged for long-gap fills
    double iqr_k = 1.5;
    double z_thresh = 3.0;
    double winsor_lower_pct = 5.0;
    double winsor_upper_pct = 95.0;
};

// Quantile by linear interpolation between order statistics (the "type 7"
// rule): index p*(n-1) into the sorted values. Outlier fences and winsor
// limits both depend on this exact method.
double quantile_type7(std::vector<double> values, double p);

// Fills gaps in a windowed series. Runs of missing values no longer than
// max_short_gap are linearly interpolated between their present neighbors
// (edge runs copy the nearest present value). Longer runs are filled per
// position with the mean of the ma_window present values nearest to it,
// growing the search radius symmetrically until enough are found.
std::vector<double> interpolate_gaps(const std::vector<std::optional<double>>& series,
                                     const CleansePolicy& policy);

// Flags values outside [Q1 - k*IQR, Q3 + k*IQR] or with |z| > z_thresh
// (sample standard deviation). Zero IQR and zero variance flag nothing.
std::vector<uint8_t> detect_outliers(const std::vector<double>& series,
                                     const CleansePolicy& policy);

// Clamps flagged values to the [lower, upper] percentiles of the unflagged
// values. Throws if everything is flagged.
std::vector<double> winsorize(const std::vector<double>& series,
                              const std::vector<uint8_t>& mask, const CleansePolicy& policy);

struct CleanseLogEntry {
    std::string key;  // "r<row>c<col>|<band>|<field>"
    int window = 0;
    std::string action;  // "interpolate" | "ma_fill" | "winsorize"
    std::string before;  // empty when the value was missing
    double after = 0;
};

// Full cleanse over aggregated cells: per (tile, band) and per numeric field,
// impute missing windows across [0, n_windows), then outlier-treat. Returns
// one CellAggregate per (tile, band, window), fully dense, canonically sorted.
std::vector<CellAggregate> cleanse_cells(const std::vector<CellAggregate>& cells, int n_windows,
                                         const CleansePolicy& policy,
                                         std::vector<CleanseLogEntry>* log = nullptr);

}  // namespace bandcast
