#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "bandcast/features.hpp"
#include "bandcast/spatial.hpp"
#include "bandcast/types.hpp"

namespace bandcast {

struct RegionProfile {
    std::string name;
    double lat_min = 0, lat_max = 0, lon_min = 0, lon_max = 0;
    double tile_size_deg = 0.01;
    int n_rows = 0, n_cols = 0;
    std::vector<double> density;  // row-major per-tile relative density in [0,1]
    std::vector<std::string> bands;
    int start_year = 2019, end_year = 2023;

    GridSpec grid() const;
    WindowSpec windows() const;  // quarterly, epoch Jan 1 of start_year
    int n_windows() const;
    double density_sum() const;
};

// Ground-truth lag coupling between latent KPI drivers and the deployed-
// bandwidth proxy. Weight arrays are indexed by KPI (kKpiNames order).
struct CouplingSpec {
    std::array<double, kNumKpis> weights_lag0{};
    std::array<double, kNumKpis> weights_lag1{};
    std::array<double, kNumKpis> weights_lag2{};
    double noise_sigma = 4.0;
    double seasonal_amplitude = 3.0;  // sinusoid, 4-window period
    double trend_per_quarter = 0.0;
};

struct GenParams {
    double base_samples = 40.0;      // expected samples per tile-window at density 1
    double bw_base_mhz = 50.0;       // proxy baseline, uniform across tiles
    double driver_phi = 0.25;        // AR(1) coefficient of the latent drivers
    double driver_sd = 0.15;         // stationary driver standard deviation
    double device_pool_frac = 0.75;  // device-id pool size as a fraction of samples
};

// Driver values are kept for the two windows before window 0 so lagged terms
// are defined from the first real window onward.
constexpr int kDriverLeadIn = 2;

struct GenResult {
    std::vector<RawSample> samples;        // sorted by (timestamp, device_id, band)
    std::vector<RegulatoryRecord> records; // sorted by (site_id, band, effective_from)
    GridSpec grid;
    WindowSpec windows;
    int n_windows = 0;
    // drivers[tile_row * n_cols + tile_col][kpi][t + kDriverLeadIn]
    std::vector<std::array<std::vector<double>, kNumKpis>> drivers;

    double driver(int row, int col, int kpi, int t) const {
        return drivers[static_cast<size_t>(row) * grid.n_cols + col][kpi][t + kDriverLeadIn];
    }
};

// Deterministic function of (profile, coupling, seed, params); worker count
// changes nothing. Proxy at window t couples the tile's latent drivers at
// t, t-1, t-2 through the CouplingSpec weights.
GenResult generate_region(const RegionProfile& profile, const CouplingSpec& coupling,
                          uint64_t seed, const GenParams& params = {}, int jobs = 1);

// Fills p.density with a radial profile around the grid center:
// edge + (core - edge) * exp(-falloff * d_norm^2). Needs n_rows/n_cols set.
void radial_density(RegionProfile& p, double core, double edge, double falloff);

// Ships "ottawa-like" (medium density) and "toronto-like" (high density,
// >= 4x the expected sample volume).
std::vector<RegionProfile> builtin_profiles();
const RegionProfile& profile_by_name(const std::vector<RegionProfile>& profiles,
                                     const std::string& name);

// Default coupling: dominant lag-1 traffic weight plus small lag-0/lag-2
// terms, the scenario the lag-correlation analyses are tuned to recover.
CouplingSpec default_coupling();

}  // namespace bandcast
