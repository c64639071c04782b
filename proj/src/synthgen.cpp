#include "bandcast/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bandcast/errors.hpp"
#include "bandcast/parallel.hpp"
#include "bandcast/rng.hpp"
#include "bandcast/timeutil.hpp"

namespace bandcast {

namespace {

// Substream purpose tags; arbitrary distinct constants.
constexpr uint64_t kTagDriver = 0x44524956;  // "DRIV"
constexpr uint64_t kTagSample = 0x53414D50;  // "SAMP"
constexpr uint64_t kTagProxy = 0x50524F58;   // "PROX"

std::string pad2(int v) {
    std::string s = std::to_string(v);
    return s.size() < 2 ? "0" + s : s;
}

}  // namespace

GridSpec RegionProfile::grid() const {
    GridSpec g;
    g.origin_lat = lat_min;
    g.origin_lon = lon_min;
    g.tile_size_deg = tile_size_deg;
    g.n_rows = n_rows;
    g.n_cols = n_cols;
    return g;
}

WindowSpec RegionProfile::windows() const {
    WindowSpec w;
    w.epoch = utc_seconds(start_year, 1, 1);
    w.span_months = 3;
    w.stride_months = 3;
    return w;
}

int RegionProfile::n_windows() const { return 4 * (end_year - start_year + 1); }

double RegionProfile::density_sum() const {
    double s = 0;
    for (double d : density) s += d;
    return s;
}

CouplingSpec default_coupling() {
    CouplingSpec c;
    c.weights_lag1[0] = 60.0;  // traffic_volume: the dominant, lagged driver
    c.weights_lag0[1] = 10.0;  // latency_ratio
    c.weights_lag1[1] = 8.0;
    c.weights_lag1[2] = 10.0;  // tx_rx_ratio
    c.weights_lag0[3] = 8.0;   // norm_connections
    c.weights_lag2[3] = 8.0;
    c.weights_lag0[4] = 10.0;  // signal_strength
    c.weights_lag1[4] = 8.0;
    c.weights_lag0[5] = 6.0;   // jitter_variability
    c.weights_lag2[5] = 8.0;
    c.weights_lag1[6] = 10.0;  // sum_throughput
    c.weights_lag2[6] = 8.0;
    return c;
}

void radial_density(RegionProfile& p, double core, double edge, double falloff) {
    p.density.assign(static_cast<size_t>(p.n_rows) * p.n_cols, 0.0);
    double cr = (p.n_rows - 1) / 2.0, cc = (p.n_cols - 1) / 2.0;
    double dmax = std::hypot(cr, cc);
    for (int r = 0; r < p.n_rows; ++r)
        for (int c = 0; c < p.n_cols; ++c) {
            double dn = std::hypot(r - cr, c - cc) / dmax;
            p.density[static_cast<size_t>(r) * p.n_cols + c] =
                edge + (core - edge) * std::exp(-falloff * dn * dn);
        }
}

std::vector<RegionProfile> builtin_profiles() {
    auto radial = radial_density;

    RegionProfile ottawa;
    ottawa.name = "ottawa-like";
    ottawa.lat_min = 45.38;
    ottawa.lat_max = 45.44;
    ottawa.lon_min = -75.72;
    ottawa.lon_max = -75.66;
    ottawa.n_rows = 6;
    ottawa.n_cols = 6;
    ottawa.bands = {"B700", "AWS"};
    radial(ottawa, 0.60, 0.10, 2.5);

    RegionProfile toronto;
    toronto.name = "toronto-like";
    toronto.lat_min = 43.62;
    toronto.lat_max = 43.70;
    toronto.lon_min = -79.42;
    toronto.lon_max = -79.34;
    toronto.n_rows = 8;
    toronto.n_cols = 8;
    toronto.bands = {"B700", "AWS"};
    radial(toronto, 1.00, 0.55, 1.2);

    return {ottawa, toronto};
}

const RegionProfile& profile_by_name(const std::vector<RegionProfile>& profiles,
                                     const std::string& name) {
    for (const auto& p : profiles)
        if (p.name == name) return p;
    throw ConfigError("unknown region profile: " + name);
}

GenResult generate_region(const RegionProfile& profile, const CouplingSpec& coupling,
                          uint64_t seed, const GenParams& params, int jobs) {
    if (profile.lat_min >= profile.lat_max || profile.lon_min >= profile.lon_max)
        throw ConfigError("region bbox is empty");
    if (profile.n_rows < 1 || profile.n_cols < 1 || profile.tile_size_deg <= 0)
        throw ConfigError("zero-area tiles");
    if (profile.density.size() != static_cast<size_t>(profile.n_rows) * profile.n_cols)
        throw ConfigError("density map shape does not match the grid");
    for (double d : profile.density)
        if (d < 0 || d > 1) throw ConfigError("density values must lie in [0, 1]");
    if (profile.bands.empty()) throw ConfigError("profile needs at least one band");
    if (profile.start_year > profile.end_year) throw ConfigError("start_year > end_year");
    if (coupling.noise_sigma < 0 || coupling.seasonal_amplitude < 0)
        throw ConfigError("noise_sigma and seasonal_amplitude must be >= 0");

    GenResult res;
    res.grid = profile.grid();
    res.windows = profile.windows();
    res.n_windows = profile.n_windows();

    size_t n_tiles = static_cast<size_t>(profile.n_rows) * profile.n_cols;
    res.drivers.resize(n_tiles);
    std::vector<std::vector<RawSample>> tile_samples(n_tiles);
    std::vector<std::vector<RegulatoryRecord>> tile_records(n_tiles);

    double band_share = 1.0 / static_cast<double>(profile.bands.size());
    const double pi = std::numbers::pi;

    parallel_for(n_tiles, jobs, [&](size_t idx) {
        int row = static_cast<int>(idx) / profile.n_cols;
        int col = static_cast<int>(idx) % profile.n_cols;
        double dens = profile.density[idx];
        int total = res.n_windows + kDriverLeadIn;

        // Latent AR(1) drivers, one per KPI, clamped to [0, 1]. The first
        // value is drawn from the stationary distribution.
        auto& drv = res.drivers[idx];
        double innov_sd = params.driver_sd * std::sqrt(1.0 - params.driver_phi * params.driver_phi);
        for (int k = 0; k < kNumKpis; ++k) {
            Rng rng = substream(seed, kTagDriver, idx, static_cast<uint64_t>(k));
            drv[k].resize(total);
            double d = 0.5 + params.driver_sd * rng.truncated_normal();
            drv[k][0] = std::clamp(d, 0.0, 1.0);
            for (int t = 1; t < total; ++t) {
                d = 0.5 + params.driver_phi * (drv[k][t - 1] - 0.5) +
                    innov_sd * rng.truncated_normal();
                drv[k][t] = std::clamp(d, 0.0, 1.0);
            }
        }

        std::string site = "s_r" + pad2(row) + "c" + pad2(col);
        for (int w = 0; w < res.n_windows; ++w) {
            int ti = w + kDriverLeadIn;
            int64_t ws = res.windows.window_start(w);
            int64_t we = res.windows.window_end(w);

            // Crowdsourced samples for this tile-window.
            Rng rng = substream(seed, kTagSample, idx, static_cast<uint64_t>(w));
            int64_t n = rng.poisson(params.base_samples * dens);
            if (n > 0) {
                int64_t pool =
                    std::max<int64_t>(1, std::llround(params.device_pool_frac *
                                                      static_cast<double>(n)));
                double d_tr = drv[0][ti], d_lat = drv[1][ti], d_txr = drv[2][ti];
                double d_con = drv[3][ti], d_sig = drv[4][ti], d_jit = drv[5][ti];
                double d_thr = drv[6][ti];
                // Latency spread chosen so min/mean recovers 0.4 + 0.4*d_lat.
                double ratio_target = 0.4 + 0.4 * d_lat;
                double lat_spread = 2.0 * 20.0 * (1.0 / ratio_target - 1.0);
                double jit_span = 2.0 + 8.0 * d_jit;
                double byte_scale = 5.0e7 * (0.5 + d_thr);

                for (int64_t i = 0; i < n; ++i) {
                    RawSample s;
                    s.device_id = "d" + std::to_string(idx) + "_" + std::to_string(w) + "_" +
                                  std::to_string(rng.next_u64() % static_cast<uint64_t>(pool));
                    s.timestamp = ws + static_cast<int64_t>(rng.uniform() *
                                                            static_cast<double>(we - ws));
                    s.lat = res.grid.origin_lat + (row + rng.uniform()) * res.grid.tile_size_deg;
                    s.lon = res.grid.origin_lon + (col + rng.uniform()) * res.grid.tile_size_deg;
                    s.band = profile.bands[rng.next_u64() % profile.bands.size()];
                    s.ul_mbps = std::max(0.0, 10.0 + 20.0 * d_tr + 2.0 * rng.truncated_normal());
                    s.dl_mbps = std::max(0.0, 30.0 + 60.0 * d_tr + 4.0 * rng.truncated_normal());
                    s.latency_ms = 20.0 + lat_spread * rng.uniform();
                    s.jitter_ms = jit_span * rng.uniform();
                    s.bytes_tx = byte_scale * (0.5 + d_txr) *
                                 std::max(0.05, 1.0 + 0.25 * rng.truncated_normal());
                    s.bytes_rx = byte_scale * std::max(0.05, 1.0 + 0.25 * rng.truncated_normal());
                    s.signal_dbm = std::clamp(-95.0 + 30.0 * d_sig + 4.0 * rng.truncated_normal(),
                                              -140.0, -40.0);
                    s.connections = rng.poisson(2.0 + 6.0 * d_con);
                    tile_samples[idx].push_back(std::move(s));
                }
            }

            // Proxy: coupling-weighted drivers + seasonal + trend + noise,
            // restated per window as regulatory records split across bands.
            Rng prng = substream(seed, kTagProxy, idx, static_cast<uint64_t>(w));
            double b = params.bw_base_mhz;
            for (int k = 0; k < kNumKpis; ++k) {
                b += coupling.weights_lag0[k] * drv[k][ti];
                b += coupling.weights_lag1[k] * drv[k][ti - 1];
                b += coupling.weights_lag2[k] * drv[k][ti - 2];
            }
            b += coupling.seasonal_amplitude * std::sin(2.0 * pi * w / 4.0);
            b += coupling.trend_per_quarter * w;
            b += coupling.noise_sigma * prng.normal();
            // Records must stay positive; default scenarios never clamp.
            double per_band = std::max(0.25, b * band_share);
            for (const auto& band : profile.bands) {
                RegulatoryRecord r;
                r.site_id = site;
                r.lat = res.grid.origin_lat + (row + 0.5) * res.grid.tile_size_deg;
                r.lon = res.grid.origin_lon + (col + 0.5) * res.grid.tile_size_deg;
                r.band = band;
                r.deployed_bw_mhz = per_band;
                r.effective_from = ws;
                tile_records[idx].push_back(std::move(r));
            }
        }
    });

    for (auto& v : tile_samples)
        res.samples.insert(res.samples.end(), std::make_move_iterator(v.begin()),
                           std::make_move_iterator(v.end()));
    for (auto& v : tile_records)
        res.records.insert(res.records.end(), std::make_move_iterator(v.begin()),
                           std::make_move_iterator(v.end()));

    std::sort(res.samples.begin(), res.samples.end(), [](const RawSample& a, const RawSample& b) {
        if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
        if (a.device_id != b.device_id) return a.device_id < b.device_id;
        if (a.band != b.band) return a.band < b.band;
        if (a.lat != b.lat) return a.lat < b.lat;
        return a.lon < b.lon;
    });
    std::sort(res.records.begin(), res.records.end(),
              [](const RegulatoryRecord& a, const RegulatoryRecord& b) {
                  if (a.site_id != b.site_id) return a.site_id < b.site_id;
                  if (a.band != b.band) return a.band < b.band;
                  return a.effective_from < b.effective_from;
              });
    return res;
}

}  // namespace bandcast
