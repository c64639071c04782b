#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bandcast/types.hpp"

namespace bandcast {

struct GridSpec {
    double origin_lat = 0;
    double origin_lon = 0;
    double tile_size_deg = 0.01;
    int n_rows = 0;
    int n_cols = 0;
};

struct TileId {
    int row = 0;
    int col = 0;
    bool operator==(const TileId& o) const { return row == o.row && col == o.col; }
};

struct WindowSpec {
    int64_t epoch = 0;  // UTC start of window 0
    int span_months = 3;
    int stride_months = 3;

    int64_t window_start(int w) const;
    int64_t window_end(int w) const;  // exclusive
};

struct CellAggregate {
    TileId tile;
    std::string band;
    int window = 0;
    double avg_ul = 0, avg_dl = 0;
    double min_latency = 0, mean_latency = 0;
    double avg_jitter = 0, min_jitter = 0;
    double sum_bytes_tx = 0, sum_bytes_rx = 0;
    double mean_signal = 0;
    // Counts are doubles so cleansed (imputed) cells can carry fractional
    // values; aggregation itself always produces exact integers.
    double connection_count = 0;
    double unique_devices = 0;
    double sample_count = 0;
};

struct ProxyTarget {
    TileId tile;
    int window = 0;
    double deployed_bw_mhz = 0;
};

// Half-open tiles [edge, edge+size). Throws OutOfExtentError outside the grid.
TileId assign_tile(double lat, double lon, const GridSpec& grid);

// Every window whose [start, start+span) contains the timestamp; exactly one
// element when stride = span. Throws ConfigError if timestamp < epoch.
std::vector<int> assign_window(int64_t timestamp, const WindowSpec& spec);

// Per-(tile, band, window) means/mins/sums. Out-of-extent samples are dropped
// (counted into *dropped if given). Output canonically sorted by
// (row, col, band, window) so serialization is order-independent.
std::vector<CellAggregate> aggregate(const std::vector<RawSample>& samples, const GridSpec& grid,
                                     const WindowSpec& windows, size_t* dropped = nullptr);

// Deployed bandwidth per (tile, window): for each (site, band) the most
// recent record effective before the window's end contributes, summed across
// the tile's sites and bands. Emitted for every window in [0, n_windows) for
// tiles that have at least one site. Sorted by (row, col, window).
std::vector<ProxyTarget> aggregate_proxy(const std::vector<RegulatoryRecord>& records,
                                         const GridSpec& grid, const WindowSpec& windows,
                                         int n_windows, size_t* dropped = nullptr);

}  // namespace bandcast
