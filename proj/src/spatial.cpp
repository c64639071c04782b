#include "bandcast/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

#include "bandcast/errors.hpp"
#include "bandcast/timeutil.hpp"

namespace bandcast {

int64_t WindowSpec::window_start(int w) const { return add_months(epoch, w * stride_months); }

int64_t WindowSpec::window_end(int w) const {
    return add_months(epoch, w * stride_months + span_months);
}

namespace {

int grid_index(double coord, double origin, double size) {
    double q = (coord - origin) / size;
    // Division can land a boundary point a few ulps short of the integer it
    // belongs to; snap so the half-open convention survives fp rounding.
    double r = std::round(q);
    if (std::abs(q - r) < 1e-9) q = r;
    return static_cast<int>(std::floor(q));
}

}  // namespace

TileId assign_tile(double lat, double lon, const GridSpec& grid) {
    int row = grid_index(lat, grid.origin_lat, grid.tile_size_deg);
    int col = grid_index(lon, grid.origin_lon, grid.tile_size_deg);
    if (row < 0 || row >= grid.n_rows || col < 0 || col >= grid.n_cols)
        throw OutOfExtentError("point outside grid extent");
    return {row, col};
}

std::vector<int> assign_window(int64_t timestamp, const WindowSpec& spec) {
    if (timestamp < spec.epoch) throw ConfigError("timestamp precedes window epoch");
    int m = month_index(timestamp, spec.epoch);
    // Windows w with w*stride <= m < w*stride + span; the loop re-checks the
    // containment, so lo only needs to be a safe lower bound.
    int lo = std::max(0, (m - spec.span_months + 1) / spec.stride_months);
    int hi = m / spec.stride_months;
    std::vector<int> out;
    for (int w = lo; w <= hi; ++w)
        if (w * spec.stride_months <= m && m < w * spec.stride_months + spec.span_months)
            out.push_back(w);
    return out;
}

std::vector<CellAggregate> aggregate(const std::vector<RawSample>& samples, const GridSpec& grid,
                                     const WindowSpec& windows, size_t* dropped) {
    struct Acc {
        double sum_ul = 0, sum_dl = 0;
        double min_latency = 0, sum_latency = 0;
        double sum_jitter = 0, min_jitter = 0;
        double sum_bytes_tx = 0, sum_bytes_rx = 0;
        double sum_signal = 0;
        int64_t connection_count = 0;
        std::set<std::string> devices;
        int64_t n = 0;
    };
    // An ordered map keyed by the canonical sort order makes output order
    // independent of input order for free.
    std::map<std::tuple<int, int, std::string, int>, Acc> cells;
    size_t n_dropped = 0;

    for (const auto& s : samples) {
        TileId tile;
        try {
            tile = assign_tile(s.lat, s.lon, grid);
        } catch (const OutOfExtentError&) {
            ++n_dropped;
            continue;
        }
        for (int w : assign_window(s.timestamp, windows)) {
            Acc& a = cells[{tile.row, tile.col, s.band, w}];
            if (a.n == 0) {
                a.min_latency = s.latency_ms;
                a.min_jitter = s.jitter_ms;
            } else {
                a.min_latency = std::min(a.min_latency, s.latency_ms);
                a.min_jitter = std::min(a.min_jitter, s.jitter_ms);
            }
            a.sum_ul += s.ul_mbps;
            a.sum_dl += s.dl_mbps;
            a.sum_latency += s.latency_ms;
            a.sum_jitter += s.jitter_ms;
            a.sum_bytes_tx += s.bytes_tx;
            a.sum_bytes_rx += s.bytes_rx;
            a.sum_signal += s.signal_dbm;
            a.connection_count += s.connections;
            a.devices.insert(s.device_id);
            ++a.n;
        }
    }
    if (dropped) *dropped = n_dropped;

    std::vector<CellAggregate> out;
    out.reserve(cells.size());
    for (const auto& [key, a] : cells) {
        CellAggregate c;
        c.tile = {std::get<0>(key), std::get<1>(key)};
        c.band = std::get<2>(key);
        c.window = std::get<3>(key);
        double n = static_cast<double>(a.n);
        c.avg_ul = a.sum_ul / n;
        c.avg_dl = a.sum_dl / n;
        c.min_latency = a.min_latency;
        c.mean_latency = a.sum_latency / n;
        c.avg_jitter = a.sum_jitter / n;
        c.min_jitter = a.min_jitter;
        c.sum_bytes_tx = a.sum_bytes_tx;
        c.sum_bytes_rx = a.sum_bytes_rx;
        c.mean_signal = a.sum_signal / n;
        c.connection_count = static_cast<double>(a.connection_count);
        c.unique_devices = static_cast<double>(a.devices.size());
        c.sample_count = static_cast<double>(a.n);
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<ProxyTarget> aggregate_proxy(const std::vector<RegulatoryRecord>& records,
                                         const GridSpec& grid, const WindowSpec& windows,
                                         int n_windows, size_t* dropped) {
    // Per (site, band): records sorted by effective_from. A later record
    // restates the site/band's deployment, so at any window the most recent
    // record effective before the window's (exclusive) end is the live one.
    struct SiteSeries {
        TileId tile;
        std::vector<std::pair<int64_t, double>> events;  // (effective_from, bw)
    };
    std::map<std::pair<std::string, std::string>, SiteSeries> sites;
    size_t n_dropped = 0;

    for (const auto& r : records) {
        TileId tile;
        try {
            tile = assign_tile(r.lat, r.lon, grid);
        } catch (const OutOfExtentError&) {
            ++n_dropped;
            continue;
        }
        auto& s = sites[{r.site_id, r.band}];
        s.tile = tile;
        s.events.emplace_back(r.effective_from, r.deployed_bw_mhz);
    }
    if (dropped) *dropped = n_dropped;

    for (auto& [key, s] : sites) std::sort(s.events.begin(), s.events.end());

    std::map<std::pair<std::pair<int, int>, int>, double> acc;  // ((row,col), window) -> MHz
    for (const auto& [key, s] : sites) {
        for (int w = 0; w < n_windows; ++w) {
            int64_t end = windows.window_end(w);
            // Live record: last event strictly before the exclusive window end.
            double bw = 0;
            bool live = false;
            for (const auto& [eff, v] : s.events) {
                if (eff < end) {
                    bw = v;
                    live = true;
                } else {
                    break;
                }
            }
            if (live) acc[{{s.tile.row, s.tile.col}, w}] += bw;
        }
    }

    std::vector<ProxyTarget> out;
    out.reserve(acc.size());
    for (const auto& [key, bw] : acc)
        out.push_back({{key.first.first, key.first.second}, key.second, bw});
    return out;
}

}  // namespace bandcast
