#pragma once

#include <cstdint>
#include <string>

namespace bandcast {

// One crowdsourced measurement sample. Field ranges are enforced by the
// generator and checked by tests, not re-validated on every hot-path read.
struct RawSample {
    std::string device_id;
    int64_t timestamp = 0;  // UTC seconds
    double lat = 0, lon = 0;
    std::string band;
    double ul_mbps = 0, dl_mbps = 0;
    double latency_ms = 0;
    double jitter_ms = 0;
    double bytes_tx = 0, bytes_rx = 0;
    double signal_dbm = 0;
    int64_t connections = 0;
};

// One regulatory deployed-bandwidth record. A later record for the same
// (site, band) restates that site's current deployment.
struct RegulatoryRecord {
    std::string site_id;
    double lat = 0, lon = 0;
    std::string band;
    double deployed_bw_mhz = 0;
    int64_t effective_from = 0;  // UTC seconds
};

}  // namespace bandcast
