#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <vector>

#include "bandcast/errors.hpp"
#include "bandcast/rng.hpp"
#include "bandcast/spatial.hpp"
#include "bandcast/timeutil.hpp"

using namespace bandcast;

namespace {

GridSpec grid5() {
    GridSpec g;
    g.origin_lat = 45.0;
    g.origin_lon = -76.0;
    g.tile_size_deg = 0.01;
    g.n_rows = 5;
    g.n_cols = 5;
    return g;
}

WindowSpec quarters() {
    WindowSpec w;
    w.epoch = utc_seconds(2019, 1, 1);
    w.span_months = 3;
    w.stride_months = 3;
    return w;
}

RawSample sample(const char* dev, int64_t ts, double lat, double lon, const char* band) {
    RawSample s;
    s.device_id = dev;
    s.timestamp = ts;
    s.lat = lat;
    s.lon = lon;
    s.band = band;
    return s;
}

bool same_cell(const CellAggregate& a, const CellAggregate& b) {
    return a.tile == b.tile && a.band == b.band && a.window == b.window && a.avg_ul == b.avg_ul &&
           a.avg_dl == b.avg_dl && a.min_latency == b.min_latency &&
           a.mean_latency == b.mean_latency && a.avg_jitter == b.avg_jitter &&
           a.min_jitter == b.min_jitter && a.sum_bytes_tx == b.sum_bytes_tx &&
           a.sum_bytes_rx == b.sum_bytes_rx && a.mean_signal == b.mean_signal &&
           a.connection_count == b.connection_count && a.unique_devices == b.unique_devices &&
           a.sample_count == b.sample_count;
}

}  // namespace

// ---------------------------------------------------------------- tiles

TEST_CASE("assign_tile documented fixture") {
    TileId t = assign_tile(45.037, -75.974, grid5());
    CHECK(t.row == 3);
    CHECK(t.col == 2);
}

TEST_CASE("assign_tile half-open edges") {
    GridSpec g = grid5();
    TileId origin = assign_tile(45.0, -76.0, g);
    CHECK(origin.row == 0);
    CHECK(origin.col == 0);
    // a shared edge belongs to the higher tile
    TileId edge = assign_tile(45.01, -75.99, g);
    CHECK(edge.row == 1);
    CHECK(edge.col == 1);
}

TEST_CASE("assign_tile rejects out-of-extent points") {
    GridSpec g = grid5();
    CHECK_THROWS_AS(assign_tile(44.999, -75.99, g), OutOfExtentError);
    CHECK_THROWS_AS(assign_tile(45.05, -75.99, g), OutOfExtentError);  // top edge is exclusive
    CHECK_THROWS_AS(assign_tile(45.02, -76.001, g), OutOfExtentError);
    CHECK_THROWS_AS(assign_tile(45.02, -75.95, g), OutOfExtentError);
    CHECK_NOTHROW(assign_tile(45.049, -75.951, g));
}

// ---------------------------------------------------------------- windows

TEST_CASE("window bounds follow calendar months") {
    WindowSpec w = quarters();
    CHECK(w.window_start(0) == utc_seconds(2019, 1, 1));
    CHECK(w.window_end(0) == utc_seconds(2019, 4, 1));
    CHECK(w.window_start(1) == utc_seconds(2019, 4, 1));
    CHECK(w.window_end(3) == utc_seconds(2020, 1, 1));
}

TEST_CASE("assign_window with stride = span gives exactly one window") {
    WindowSpec w = quarters();
    CHECK(assign_window(utc_seconds(2019, 1, 1), w) == std::vector<int>{0});
    CHECK(assign_window(utc_seconds(2019, 3, 31, 23, 59, 59), w) == std::vector<int>{0});
    CHECK(assign_window(utc_seconds(2019, 4, 1), w) == std::vector<int>{1});
    CHECK(assign_window(utc_seconds(2019, 5, 10), w) == std::vector<int>{1});
}

TEST_CASE("assign_window with overlapping windows lists every cover") {
    WindowSpec w = quarters();
    w.stride_months = 1;
    // 2019-05-10 sits in month 4; spans starting at months 2, 3, 4 cover it.
    CHECK(assign_window(utc_seconds(2019, 5, 10), w) == std::vector<int>{2, 3, 4});
    CHECK(assign_window(utc_seconds(2019, 1, 15), w) == std::vector<int>{0});
    CHECK(assign_window(utc_seconds(2019, 2, 15), w) == std::vector<int>{0, 1});
}

TEST_CASE("assign_window rejects pre-epoch timestamps") {
    CHECK_THROWS_AS(assign_window(utc_seconds(2018, 12, 31), quarters()), ConfigError);
}

// ---------------------------------------------------------------- aggregate

TEST_CASE("aggregate means, mins and sums on a 3-sample fixture") {
    GridSpec g = grid5();
    WindowSpec w = quarters();

    RawSample s1 = sample("d1", utc_seconds(2019, 1, 15), 45.001, -75.999, "B1");
    s1.ul_mbps = 10;
    s1.dl_mbps = 20;
    s1.latency_ms = 20;
    s1.jitter_ms = 2;
    s1.bytes_tx = 100;
    s1.bytes_rx = 200;
    s1.signal_dbm = -80;
    s1.connections = 3;

    RawSample s2 = sample("d2", utc_seconds(2019, 2, 20), 45.002, -75.998, "B1");
    s2.ul_mbps = 30;
    s2.dl_mbps = 40;
    s2.latency_ms = 40;
    s2.jitter_ms = 4;
    s2.bytes_tx = 300;
    s2.bytes_rx = 400;
    s2.signal_dbm = -90;
    s2.connections = 5;

    RawSample s3 = sample("d1", utc_seconds(2019, 3, 1), 45.001, -75.999, "B2");
    s3.ul_mbps = 7;
    s3.dl_mbps = 9;
    s3.latency_ms = 50;
    s3.jitter_ms = 6;
    s3.bytes_tx = 10;
    s3.bytes_rx = 20;
    s3.signal_dbm = -100;
    s3.connections = 1;

    std::vector<CellAggregate> cells = aggregate({s1, s2, s3}, g, w);
    REQUIRE(cells.size() == 2);

    const CellAggregate& b1 = cells[0];
    CHECK(b1.band == "B1");
    CHECK(b1.tile == TileId{0, 0});
    CHECK(b1.window == 0);
    CHECK(b1.avg_ul == 20.0);
    CHECK(b1.avg_dl == 30.0);
    CHECK(b1.min_latency == 20.0);
    CHECK(b1.mean_latency == 30.0);
    CHECK(b1.avg_jitter == 3.0);
    CHECK(b1.min_jitter == 2.0);
    CHECK(b1.sum_bytes_tx == 400.0);
    CHECK(b1.sum_bytes_rx == 600.0);
    CHECK(b1.mean_signal == -85.0);
    CHECK(b1.connection_count == 8.0);
    CHECK(b1.unique_devices == 2.0);
    CHECK(b1.sample_count == 2.0);

    const CellAggregate& b2 = cells[1];
    CHECK(b2.band == "B2");
    CHECK(b2.sample_count == 1.0);
    CHECK(b2.unique_devices == 1.0);
    CHECK(b2.avg_ul == 7.0);
}

TEST_CASE("aggregate is invariant to input order") {
    GridSpec g = grid5();
    WindowSpec w = quarters();
    Rng r(31);
    std::vector<RawSample> samples;
    for (int i = 0; i < 300; ++i) {
        RawSample s = sample(("dev" + std::to_string(i % 17)).c_str(),
                             utc_seconds(2019, 1, 1) + static_cast<int64_t>(r.uniform() * 3.0e7),
                             r.uniform(45.0, 45.0499), r.uniform(-76.0, -75.9501),
                             i % 3 == 0 ? "B1" : "B2");
        s.ul_mbps = r.uniform(0, 50);
        s.dl_mbps = r.uniform(0, 100);
        s.latency_ms = r.uniform(5, 80);
        s.jitter_ms = r.uniform(0, 10);
        s.bytes_tx = r.uniform(0, 1e6);
        s.bytes_rx = r.uniform(0, 1e6);
        s.signal_dbm = r.uniform(-120, -60);
        s.connections = static_cast<int64_t>(r.uniform(1, 9));
        samples.push_back(s);
    }

    std::vector<CellAggregate> base = aggregate(samples, g, w);

    std::vector<RawSample> shuffled = samples;
    for (size_t i = shuffled.size(); i > 1; --i)
        std::swap(shuffled[i - 1], shuffled[r.next_u64() % i]);
    std::vector<CellAggregate> again = aggregate(shuffled, g, w);

    REQUIRE(base.size() == again.size());
    for (size_t i = 0; i < base.size(); ++i) CHECK(same_cell(base[i], again[i]));
}

TEST_CASE("aggregate conserves sample mass and counts drops") {
    GridSpec g = grid5();
    WindowSpec w = quarters();
    std::vector<RawSample> samples;
    samples.push_back(sample("d1", utc_seconds(2019, 1, 2), 45.01, -75.98, "B1"));
    samples.push_back(sample("d2", utc_seconds(2019, 1, 2), 45.02, -75.97, "B1"));
    samples.push_back(sample("d3", utc_seconds(2019, 1, 2), 44.5, -75.98, "B1"));  // outside

    size_t dropped = 999;
    std::vector<CellAggregate> cells = aggregate(samples, g, w, &dropped);
    CHECK(dropped == 1);
    double mass = 0;
    for (const auto& c : cells) mass += c.sample_count;
    CHECK(mass == 2.0);
}

TEST_CASE("aggregate output is canonically sorted") {
    GridSpec g = grid5();
    WindowSpec w = quarters();
    std::vector<RawSample> samples;
    samples.push_back(sample("d1", utc_seconds(2019, 5, 2), 45.04, -75.96, "B2"));
    samples.push_back(sample("d1", utc_seconds(2019, 1, 2), 45.04, -75.96, "B1"));
    samples.push_back(sample("d1", utc_seconds(2019, 1, 2), 45.0, -76.0, "B9"));

    std::vector<CellAggregate> cells = aggregate(samples, g, w);
    REQUIRE(cells.size() == 3);
    CHECK(cells[0].tile == TileId{0, 0});
    CHECK(cells[1].band == "B1");
    CHECK(cells[1].window == 0);
    CHECK(cells[2].band == "B2");
    CHECK(cells[2].window == 1);
}

// ---------------------------------------------------------------- proxy

TEST_CASE("aggregate_proxy sums sites and applies restatements") {
    GridSpec g = grid5();
    WindowSpec w = quarters();

    RegulatoryRecord a1{"siteA", 45.001, -75.999, "B1", 10.0, utc_seconds(2018, 6, 1)};
    RegulatoryRecord b1{"siteB", 45.002, -75.998, "B1", 15.0, utc_seconds(2019, 1, 15)};
    RegulatoryRecord a2{"siteA", 45.001, -75.999, "B1", 40.0, utc_seconds(2019, 4, 2)};

    std::vector<ProxyTarget> proxy = aggregate_proxy({a1, b1, a2}, g, w, 3);
    REQUIRE(proxy.size() == 3);
    for (int t = 0; t < 3; ++t) {
        CHECK(proxy[t].tile == TileId{0, 0});
        CHECK(proxy[t].window == t);
    }
    // window 0: siteA at 10 plus siteB effective mid-window
    CHECK(proxy[0].deployed_bw_mhz == 25.0);
    // window 1 onward: siteA restated to 40
    CHECK(proxy[1].deployed_bw_mhz == 55.0);
    CHECK(proxy[2].deployed_bw_mhz == 55.0);
}

TEST_CASE("aggregate_proxy separates tiles and counts dropped sites") {
    GridSpec g = grid5();
    WindowSpec w = quarters();
    RegulatoryRecord in1{"s1", 45.001, -75.999, "B1", 20.0, utc_seconds(2018, 1, 1)};
    RegulatoryRecord in2{"s2", 45.031, -75.969, "B1", 30.0, utc_seconds(2018, 1, 1)};
    RegulatoryRecord out{"s3", 46.0, -75.999, "B1", 99.0, utc_seconds(2018, 1, 1)};

    size_t dropped = 0;
    std::vector<ProxyTarget> proxy = aggregate_proxy({in1, in2, out}, g, w, 2, &dropped);
    CHECK(dropped == 1);
    REQUIRE(proxy.size() == 4);  // two tiles x two windows
    CHECK(proxy[0].tile == TileId{0, 0});
    CHECK(proxy[0].deployed_bw_mhz == 20.0);
    CHECK(proxy[2].tile == TileId{3, 3});
    CHECK(proxy[2].deployed_bw_mhz == 30.0);
}

TEST_CASE("aggregate_proxy sums bands within a site") {
    GridSpec g = grid5();
    WindowSpec w = quarters();
    RegulatoryRecord r1{"s1", 45.001, -75.999, "B1", 10.0, utc_seconds(2018, 1, 1)};
    RegulatoryRecord r2{"s1", 45.001, -75.999, "B2", 7.5, utc_seconds(2018, 1, 1)};
    std::vector<ProxyTarget> proxy = aggregate_proxy({r1, r2}, g, w, 1);
    REQUIRE(proxy.size() == 1);
    CHECK(proxy[0].deployed_bw_mhz == 17.5);
}
