#include "bandcast/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "bandcast/csv.hpp"
#include "bandcast/errors.hpp"
#include "bandcast/models.hpp"
#include "bandcast/rng.hpp"
#include "bandcast/timeutil.hpp"

namespace bandcast {

namespace fs = std::filesystem;

namespace {

constexpr uint64_t kTagRegion = 0x5245474EULL;    // region substream split
constexpr uint64_t kTagForest = 0x464F5253ULL;    // forest seed
constexpr uint64_t kTagGbm = 0x47424D53ULL;       // gbm seed
constexpr uint64_t kTagTransfer = 0x5846455221ULL;  // transfer study seeds

std::string region_dir(const RunConfig& cfg, const std::string& region) {
    return (fs::path(cfg.out_dir) / "regions" / region).string();
}

// Regions split off independent generator streams so two regions never share
// per-tile noise even when their grids coincide.
uint64_t region_seed(uint64_t master, const std::string& name) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : name) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return substream(master, kTagRegion, h).next_u64();
}

uint64_t parse_u64(const std::string& s) {
    uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw ConfigError("bad unsigned field: '" + s + "'");
    return v;
}

const std::vector<std::string> kSampleHeader = {
    "device_id", "timestamp", "lat",      "lon",      "band",       "ul_mbps",    "dl_mbps",
    "latency_ms", "jitter_ms", "bytes_tx", "bytes_rx", "signal_dbm", "connections"};

const std::vector<std::string> kCellHeader = {
    "tile_row",     "tile_col",     "band",         "window",           "avg_ul",
    "avg_dl",       "min_latency",  "mean_latency", "avg_jitter",       "min_jitter",
    "sum_bytes_tx", "sum_bytes_rx", "mean_signal",  "connection_count", "unique_devices",
    "sample_count"};

void write_samples_csv(const std::string& path, const std::vector<RawSample>& samples) {
    CsvWriter w(path, kSampleHeader);
    for (const auto& s : samples) {
        w.field(s.device_id);
        w.field(s.timestamp);
        w.field(s.lat);
        w.field(s.lon);
        w.field(s.band);
        w.field(s.ul_mbps);
        w.field(s.dl_mbps);
        w.field(s.latency_ms);
        w.field(s.jitter_ms);
        w.field(s.bytes_tx);
        w.field(s.bytes_rx);
        w.field(s.signal_dbm);
        w.field(s.connections);
        w.end_row();
    }
    w.close();
}

void write_regulatory_csv(const std::string& path, const std::vector<RegulatoryRecord>& records) {
    CsvWriter w(path, {"site_id", "lat", "lon", "band", "deployed_bw_mhz", "effective_from"});
    for (const auto& r : records) {
        w.field(r.site_id);
        w.field(r.lat);
        w.field(r.lon);
        w.field(r.band);
        w.field(r.deployed_bw_mhz);
        w.field(r.effective_from);
        w.end_row();
    }
    w.close();
}

void write_cells_csv(const std::string& path, const std::vector<CellAggregate>& cells) {
    CsvWriter w(path, kCellHeader);
    for (const auto& c : cells) {
        w.field(c.tile.row);
        w.field(c.tile.col);
        w.field(c.band);
        w.field(c.window);
        w.field(c.avg_ul);
        w.field(c.avg_dl);
        w.field(c.min_latency);
        w.field(c.mean_latency);
        w.field(c.avg_jitter);
        w.field(c.min_jitter);
        w.field(c.sum_bytes_tx);
        w.field(c.sum_bytes_rx);
        w.field(c.mean_signal);
        w.field(c.connection_count);
        w.field(c.unique_devices);
        w.field(c.sample_count);
        w.end_row();
    }
    w.close();
}

void write_proxy_csv(const std::string& path, const std::vector<ProxyTarget>& proxy) {
    CsvWriter w(path, {"tile_row", "tile_col", "window", "deployed_bw_mhz"});
    for (const auto& p : proxy) {
        w.field(p.tile.row);
        w.field(p.tile.col);
        w.field(p.window);
        w.field(p.deployed_bw_mhz);
        w.end_row();
    }
    w.close();
}

void write_panel_csv(const std::string& path, const FeaturePanel& panel) {
    std::vector<std::string> header = {"tile_row", "tile_col", "window"};
    header.insert(header.end(), panel.columns.begin(), panel.columns.end());
    header.push_back("target");
    CsvWriter w(path, header);
    for (const auto& r : panel.rows) {
        w.field(r.tile.row);
        w.field(r.tile.col);
        w.field(r.window);
        for (double v : r.x) w.field(v);
        w.field(r.target);
        w.end_row();
    }
    w.close();
}

// Fitted-model artifacts for the train stage.
void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << text;
    out.close();
    if (!out) throw IoError("write failed: " + path);
}

TransferConfig expand_frozen(const TransferConfig& tc, const std::vector<std::string>& columns) {
    TransferConfig out = tc;
    if (out.frozen_features.size() == 1 && out.frozen_features[0] == "*")
        out.frozen_features = columns;
    return out;
}

struct YearEndSums {
    std::vector<YearValue> actuals;
    std::vector<YearValue> predictions;
};

// Region-year totals at each year's last window: the sum over panel rows of
// the proxy target (actual) and the model prediction at those rows.
YearEndSums year_end_sums(const RunConfig& cfg, const RegionProfile& prof,
                          const FeaturePanel& train, const FeaturePanel& test,
                          const std::vector<double>& pred_train,
                          const std::vector<double>& pred_test) {
    const WindowSpec win = cfg.window_spec(prof);
    const int n_w = cfg.n_windows(prof);
    std::map<int, int> year_end;  // year -> last window index starting in it
    for (int w = 0; w < n_w; ++w) year_end[year_of(win.window_start(w))] = w;

    std::map<int, std::pair<double, double>> sums;  // window -> (actual, predicted)
    auto accumulate = [&](const FeaturePanel& p, const std::vector<double>& pred) {
        for (size_t i = 0; i < p.rows.size(); ++i) {
            auto it = sums.find(p.rows[i].window);
            if (it == sums.end()) continue;
            it->second.first += p.rows[i].target;
            it->second.second += pred[i];
        }
    };
    for (const auto& [year, w] : year_end) sums[w] = {0.0, 0.0};
    // Windows with no panel rows (before the largest lag) drop out again.
    std::map<int, bool> seen;
    for (const auto& p : {&train, &test})
        for (const auto& r : p->rows)
            if (sums.count(r.window)) seen[r.window] = true;
    accumulate(train, pred_train);
    accumulate(test, pred_test);

    YearEndSums out;
    for (const auto& [year, w] : year_end) {
        if (!seen.count(w)) continue;
        out.actuals.push_back({year, sums[w].first});
        out.predictions.push_back({year, sums[w].second});
    }
    return out;
}

}  // namespace

FeaturePanel panel_for_region(const RunConfig& cfg, const RegionProfile& profile, uint64_t seed) {
    GenResult res =
        generate_region(profile, cfg.coupling, region_seed(seed, profile.name), cfg.gen, cfg.jobs);
    const WindowSpec win = cfg.window_spec(profile);
    const int n_w = cfg.n_windows(profile);
    std::vector<CellAggregate> cells = aggregate(res.samples, res.grid, win);
    std::erase_if(cells, [&](const CellAggregate& c) { return c.window >= n_w; });
    std::vector<CellAggregate> clean = cleanse_cells(cells, n_w, cfg.cleanse);
    std::vector<ProxyTarget> proxy = aggregate_proxy(res.records, res.grid, win, n_w);
    return build_panel(clean, proxy, cfg.lags, n_w);
}

std::vector<RawSample> read_samples_csv(const std::string& path) {
    CsvTable t = read_csv(path);
    const int c_dev = t.column("device_id"), c_ts = t.column("timestamp"),
              c_lat = t.column("lat"), c_lon = t.column("lon"), c_band = t.column("band"),
              c_ul = t.column("ul_mbps"), c_dl = t.column("dl_mbps"),
              c_lat_ms = t.column("latency_ms"), c_jit = t.column("jitter_ms"),
              c_tx = t.column("bytes_tx"), c_rx = t.column("bytes_rx"),
              c_sig = t.column("signal_dbm"), c_conn = t.column("connections");
    std::vector<RawSample> out;
    out.reserve(t.rows.size());
    for (const auto& r : t.rows) {
        RawSample s;
        s.device_id = r[c_dev];
        s.timestamp = parse_int(r[c_ts]);
        s.lat = parse_double(r[c_lat]);
        s.lon = parse_double(r[c_lon]);
        s.band = r[c_band];
        s.ul_mbps = parse_double(r[c_ul]);
        s.dl_mbps = parse_double(r[c_dl]);
        s.latency_ms = parse_double(r[c_lat_ms]);
        s.jitter_ms = parse_double(r[c_jit]);
        s.bytes_tx = parse_double(r[c_tx]);
        s.bytes_rx = parse_double(r[c_rx]);
        s.signal_dbm = parse_double(r[c_sig]);
        s.connections = parse_int(r[c_conn]);
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<RegulatoryRecord> read_regulatory_csv(const std::string& path) {
    CsvTable t = read_csv(path);
    const int c_site = t.column("site_id"), c_lat = t.column("lat"), c_lon = t.column("lon"),
              c_band = t.column("band"), c_bw = t.column("deployed_bw_mhz"),
              c_eff = t.column("effective_from");
    std::vector<RegulatoryRecord> out;
    out.reserve(t.rows.size());
    for (const auto& r : t.rows) {
        RegulatoryRecord rec;
        rec.site_id = r[c_site];
        rec.lat = parse_double(r[c_lat]);
        rec.lon = parse_double(r[c_lon]);
        rec.band = r[c_band];
        rec.deployed_bw_mhz = parse_double(r[c_bw]);
        rec.effective_from = parse_int(r[c_eff]);
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<CellAggregate> read_cells_csv(const std::string& path) {
    CsvTable t = read_csv(path);
    std::vector<int> idx;
    for (const auto& name : kCellHeader) idx.push_back(t.column(name));
    std::vector<CellAggregate> out;
    out.reserve(t.rows.size());
    for (const auto& r : t.rows) {
        CellAggregate c;
        c.tile.row = static_cast<int>(parse_int(r[idx[0]]));
        c.tile.col = static_cast<int>(parse_int(r[idx[1]]));
        c.band = r[idx[2]];
        c.window = static_cast<int>(parse_int(r[idx[3]]));
        c.avg_ul = parse_double(r[idx[4]]);
        c.avg_dl = parse_double(r[idx[5]]);
        c.min_latency = parse_double(r[idx[6]]);
        c.mean_latency = parse_double(r[idx[7]]);
        c.avg_jitter = parse_double(r[idx[8]]);
        c.min_jitter = parse_double(r[idx[9]]);
        c.sum_bytes_tx = parse_double(r[idx[10]]);
        c.sum_bytes_rx = parse_double(r[idx[11]]);
        c.mean_signal = parse_double(r[idx[12]]);
        c.connection_count = parse_double(r[idx[13]]);
        c.unique_devices = parse_double(r[idx[14]]);
        c.sample_count = parse_double(r[idx[15]]);
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<ProxyTarget> read_proxy_csv(const std::string& path) {
    CsvTable t = read_csv(path);
    const int c_row = t.column("tile_row"), c_col = t.column("tile_col"),
              c_win = t.column("window"), c_bw = t.column("deployed_bw_mhz");
    std::vector<ProxyTarget> out;
    out.reserve(t.rows.size());
    for (const auto& r : t.rows) {
        ProxyTarget p;
        p.tile.row = static_cast<int>(parse_int(r[c_row]));
        p.tile.col = static_cast<int>(parse_int(r[c_col]));
        p.window = static_cast<int>(parse_int(r[c_win]));
        p.deployed_bw_mhz = parse_double(r[c_bw]);
        out.push_back(p);
    }
    return out;
}

FeaturePanel read_panel_csv(const std::string& path, const std::vector<int>& lags) {
    CsvTable t = read_csv(path);
    FeaturePanel panel;
    panel.lags = lags;
    for (int i = 0; i < kNumKpis; ++i)
        for (int lag : lags)
            panel.columns.push_back(std::string(kKpiNames[i]) + "_lag" + std::to_string(lag));

    std::vector<std::string> expected = {"tile_row", "tile_col", "window"};
    expected.insert(expected.end(), panel.columns.begin(), panel.columns.end());
    expected.push_back("target");
    if (t.header != expected)
        throw ConfigError("panel file " + path + " does not match the configured lag columns");

    panel.rows.reserve(t.rows.size());
    for (const auto& r : t.rows) {
        if (r.size() != expected.size())
            throw ConfigError("panel file " + path + " has a malformed row");
        PanelRow row;
        row.tile.row = static_cast<int>(parse_int(r[0]));
        row.tile.col = static_cast<int>(parse_int(r[1]));
        row.window = static_cast<int>(parse_int(r[2]));
        for (size_t j = 0; j < panel.columns.size(); ++j)
            row.x.push_back(parse_double(r[3 + j]));
        row.target = parse_double(r.back());
        panel.rows.push_back(std::move(row));
    }
    return panel;
}

void stage_gen(const RunConfig& cfg) {
    for (const std::string& name : cfg.regions_used()) {
        const RegionProfile& prof = cfg.profile(name);
        GenResult res = generate_region(prof, cfg.coupling, region_seed(cfg.seed, name), cfg.gen,
                                        cfg.jobs);
        const std::string dir = region_dir(cfg, name);
        fs::create_directories(dir);
        write_samples_csv(dir + "/samples.csv", res.samples);
        write_regulatory_csv(dir + "/regulatory.csv", res.records);
        std::cout << "[gen] " << name << ": " << res.samples.size() << " samples, "
                  << res.records.size() << " regulatory records\n";
    }
}

void stage_aggregate(const RunConfig& cfg) {
    for (const std::string& name : cfg.regions_used()) {
        const RegionProfile& prof = cfg.profile(name);
        const std::string dir = region_dir(cfg, name);
        std::vector<RawSample> samples = read_samples_csv(dir + "/samples.csv");
        std::vector<RegulatoryRecord> records = read_regulatory_csv(dir + "/regulatory.csv");
        const WindowSpec win = cfg.window_spec(prof);
        const int n_w = cfg.n_windows(prof);
        size_t dropped = 0;
        std::vector<CellAggregate> cells = aggregate(samples, prof.grid(), win, &dropped);
        std::erase_if(cells, [&](const CellAggregate& c) { return c.window >= n_w; });
        std::vector<ProxyTarget> proxy = aggregate_proxy(records, prof.grid(), win, n_w);
        write_cells_csv(dir + "/cells.csv", cells);
        write_proxy_csv(dir + "/proxy.csv", proxy);
        std::cout << "[aggregate] " << name << ": " << cells.size() << " cells, " << proxy.size()
                  << " proxy rows, " << dropped << " samples dropped\n";
    }
}

void stage_cleanse(const RunConfig& cfg) {
    for (const std::string& name : cfg.regions_used()) {
        const RegionProfile& prof = cfg.profile(name);
        const std::string dir = region_dir(cfg, name);
        std::vector<CellAggregate> cells = read_cells_csv(dir + "/cells.csv");
        std::vector<CleanseLogEntry> log;
        std::vector<CellAggregate> clean =
            cleanse_cells(cells, cfg.n_windows(prof), cfg.cleanse, &log);
        write_cells_csv(dir + "/cells_clean.csv", clean);
        CsvWriter w(dir + "/cleansing_log.csv", {"key", "window", "action", "before", "after"});
        for (const auto& e : log) {
            w.field(e.key);
            w.field(e.window);
            w.field(e.action);
            w.field(e.before);
            w.field(e.after);
            w.end_row();
        }
        w.close();
        std::cout << "[cleanse] " << name << ": " << clean.size() << " dense cells, "
                  << log.size() << " log entries\n";
    }
}

void stage_featurize(const RunConfig& cfg) {
    for (const std::string& name : cfg.regions_used()) {
        const RegionProfile& prof = cfg.profile(name);
        const std::string dir = region_dir(cfg, name);
        std::vector<CellAggregate> clean = read_cells_csv(dir + "/cells_clean.csv");
        std::vector<ProxyTarget> proxy = read_proxy_csv(dir + "/proxy.csv");
        FeaturePanel panel = build_panel(clean, proxy, cfg.lags, cfg.n_windows(prof));
        write_panel_csv(dir + "/panel.csv", panel);
        std::cout << "[featurize] " << name << ": " << panel.rows.size() << " rows x "
                  << panel.columns.size() << " columns\n";
    }
}

void stage_correlate(const RunConfig& cfg) {
    const RegionProfile& prof = cfg.profile(cfg.region);
    const std::string dir = region_dir(cfg, cfg.region);
    FeaturePanel panel = read_panel_csv(dir + "/panel.csv", cfg.lags);
    CorrelationReport rep = correlation_report(panel);

    CsvWriter w(fs::path(cfg.out_dir) / "correlations.csv",
                std::vector<std::string>{"kind", "kpi", "lag", "pearson", "n"});
    for (const auto& e : rep.by_kpi_lag) {
        w.field("pooled");
        w.field(e.kpi);
        w.field(e.lag);
        w.field(e.r);
        w.field(e.n);
        w.end_row();
    }
    for (const auto& e : rep.alignment) {
        w.field("alignment");
        w.field(e.kpi);
        w.field(e.lag);
        w.field(e.r);
        w.field(e.n);
        w.end_row();
    }
    w.close();

    // Region-mean KPI series per window (sample-count weighted across cells)
    // for the autocorrelation analyses.
    std::vector<CellAggregate> clean = read_cells_csv(dir + "/cells_clean.csv");
    const int n_w = cfg.n_windows(prof);
    CsvWriter aw(fs::path(cfg.out_dir) / "acf_pacf.csv",
                 std::vector<std::string>{"kpi", "lag", "acf", "pacf"});
    int emitted = 0;
    for (int k = 0; k < kNumKpis; ++k) {
        std::vector<double> num(static_cast<size_t>(n_w), 0.0);
        std::vector<double> den(static_cast<size_t>(n_w), 0.0);
        for (const auto& c : clean) {
            if (c.window < 0 || c.window >= n_w) continue;
            KpiVector v = compute_kpis(c);
            num[c.window] += v[k] * c.sample_count;
            den[c.window] += c.sample_count;
        }
        std::vector<double> series(static_cast<size_t>(n_w), 0.0);
        for (int t = 0; t < n_w; ++t) series[t] = den[t] > 0 ? num[t] / den[t] : 0.0;
        std::vector<double> acf, pacf;
        try {
            acf_pacf(series, cfg.acf_max_lag, acf, pacf);
        } catch (const NumericError&) {
            continue;  // degenerate series carry no autocorrelation signal
        }
        for (size_t l = 0; l < acf.size(); ++l) {
            aw.field(kKpiNames[k]);
            aw.field(static_cast<int>(l));
            aw.field(acf[l]);
            aw.field(pacf[l]);
            aw.end_row();
        }
        ++emitted;
    }
    aw.close();
    std::cout << "[correlate] " << cfg.region << ": " << rep.by_kpi_lag.size()
              << " pooled entries, " << rep.alignment.size() << " alignment entries, acf for "
              << emitted << " kpis\n";
}

void stage_train(const RunConfig& cfg) {
    const std::string dir = region_dir(cfg, cfg.region);
    FeaturePanel panel = read_panel_csv(dir + "/panel.csv", cfg.lags);
    auto [train, test] = temporal_split(panel, cfg.train_windows(), cfg.test_windows());

    Matrix Xtr, Xte;
    std::vector<double> ytr, yte;
    panel_to_xy(train, Xtr, ytr);
    panel_to_xy(test, Xte, yte);

    const std::string models_dir = (fs::path(cfg.out_dir) / "models").string();
    fs::create_directories(models_dir);

    std::vector<MetricsRow> rows;
    auto add = [&](const std::string& name, const std::vector<double>& pred) {
        rows.push_back({name, cfg.region, evaluate(yte, pred)});
    };

    LinearModel ols = fit_ols(Xtr, ytr);
    write_text(models_dir + "/ols.json", linear_model_to_json(ols, panel.columns));
    add("ols", ols.predict(Xte));

    LinearModel lasso =
        fit_lasso(Xtr, ytr, cfg.lasso_lambda, cfg.lasso_tol, cfg.lasso_max_iter);
    write_text(models_dir + "/lasso.json", linear_model_to_json(lasso, panel.columns));
    add("lasso", lasso.predict(Xte));

    TreeEnsemble tree = fit_tree(Xtr, ytr, cfg.tree_max_depth, cfg.tree_min_leaf);
    write_text(models_dir + "/tree.json", ensemble_to_json(tree));
    add("tree", tree.predict(Xte));

    TreeEnsemble forest =
        fit_forest(Xtr, ytr, cfg.forest_trees, cfg.forest_max_depth, cfg.forest_min_leaf,
                   cfg.forest_feature_frac, substream(cfg.seed, kTagForest).next_u64());
    write_text(models_dir + "/forest.json", ensemble_to_json(forest));
    add("forest", forest.predict(Xte));

    TreeEnsemble gbm = fit_gbm(Xtr, ytr, cfg.gbm_rounds, cfg.gbm_learning_rate, cfg.gbm_max_depth,
                               cfg.gbm_min_leaf, substream(cfg.seed, kTagGbm).next_u64());
    write_text(models_dir + "/gbm.json", ensemble_to_json(gbm));
    add("gbm", gbm.predict(Xte));

    CsvWriter w(fs::path(cfg.out_dir) / "metrics.csv",
                std::vector<std::string>{"model", "scenario", "rmse", "nrmse", "r2", "accuracy"});
    for (const auto& r : rows) {
        w.field(r.model);
        w.field(r.scenario);
        w.field(r.metrics.rmse);
        w.field(r.metrics.nrmse);
        w.field(r.metrics.r2);
        w.field(r.metrics.accuracy);
        w.end_row();
    }
    w.close();
    for (const auto& r : rows)
        std::cout << "[train] " << r.model << " on " << r.scenario << ": accuracy "
                  << format_double(r.metrics.accuracy) << ", nrmse "
                  << format_double(r.metrics.nrmse) << "\n";
}

void stage_transfer(const RunConfig& cfg) {
    const RegionProfile& src_prof = cfg.profile(cfg.transfer.source_region);
    const RegionProfile& tgt_prof = cfg.profile(cfg.transfer.target_region);
    const std::vector<int> train_w = cfg.train_windows();
    const std::vector<int> test_w = cfg.test_windows();

    // Seed 0 consumes the stage files; further simulation runs regenerate the
    // two regions in memory under derived master seeds.
    FeaturePanel src0 =
        read_panel_csv(region_dir(cfg, cfg.transfer.source_region) + "/panel.csv", cfg.lags);
    FeaturePanel tgt0 =
        read_panel_csv(region_dir(cfg, cfg.transfer.target_region) + "/panel.csv", cfg.lags);

    std::vector<TransferRow> rows;
    for (int i = 0; i < cfg.transfer_seeds; ++i) {
        const uint64_t master =
            i == 0 ? cfg.seed : substream(cfg.seed, kTagTransfer, static_cast<uint64_t>(i)).next_u64();
        FeaturePanel src = i == 0 ? src0 : panel_for_region(cfg, src_prof, master);
        FeaturePanel tgt = i == 0 ? tgt0 : panel_for_region(cfg, tgt_prof, master);

        auto [src_train, src_test] = temporal_split(src, train_w, test_w);
        ModelArtifact artifact = train_source(src_train, cfg.source_model);
        TransferConfig tc = expand_frozen(cfg.transfer, artifact.columns);
        TransferOutcome outcome = compare_transfer(tgt, artifact, tc, train_w, test_w, master);

        rows.push_back({cfg.transfer.source_region, cfg.transfer.target_region,
                        cfg.transfer.target_fraction, master,
                        outcome.metrics_with_transfer.nrmse,
                        outcome.metrics_without_transfer.nrmse,
                        outcome.relative_nrmse_reduction});
    }

    CsvWriter w(fs::path(cfg.out_dir) / "transfer_report.csv",
                std::vector<std::string>{"source", "target", "target_fraction", "seed",
                                         "nrmse_with", "nrmse_without", "reduction"});
    std::vector<double> reductions;
    for (const auto& r : rows) {
        w.field(r.source);
        w.field(r.target);
        w.field(r.target_fraction);
        w.field(r.seed);
        w.field(r.nrmse_with);
        w.field(r.nrmse_without);
        w.field(r.reduction);
        w.end_row();
        reductions.push_back(r.reduction);
    }
    w.close();
    std::sort(reductions.begin(), reductions.end());
    std::cout << "[transfer] " << cfg.transfer.source_region << " -> "
              << cfg.transfer.target_region << ": median reduction "
              << format_double(reductions[reductions.size() / 2]) << " over " << rows.size()
              << " seeds\n";
}

void stage_benchmark(const RunConfig& cfg) {
    const RegionProfile& prof = cfg.profile(cfg.region);
    const std::string dir = region_dir(cfg, cfg.region);
    FeaturePanel panel = read_panel_csv(dir + "/panel.csv", cfg.lags);
    auto [train, test] = temporal_split(panel, cfg.train_windows(), cfg.test_windows());

    Matrix Xtr, Xte;
    std::vector<double> ytr, yte;
    panel_to_xy(train, Xtr, ytr);
    panel_to_xy(test, Xte, yte);
    // The white-box workhorse produces the forecast the benchmarks are
    // compared against.
    LinearModel ols = fit_ols(Xtr, ytr);

    YearEndSums sums =
        year_end_sums(cfg, prof, train, test, ols.predict(Xtr), ols.predict(Xte));
    std::vector<BenchmarkRow> rows = compare_benchmarks(sums.actuals, sums.predictions,
                                                        cfg.benchmarks);

    CsvWriter w(fs::path(cfg.out_dir) / "benchmark_comparison.csv",
                std::vector<std::string>{"year", "actual_mhz", "predicted_mhz", "benchmark",
                                         "benchmark_mhz", "deviation", "overpredicts"});
    for (const auto& b : rows) {
        w.field(b.year);
        w.field(b.actual_mhz);
        w.field(b.predicted_mhz);
        w.field(b.benchmark);
        w.field(b.benchmark_mhz);
        w.field(b.deviation);
        w.field(b.overpredicts ? "1" : "0");
        w.end_row();
    }
    w.close();
    std::cout << "[benchmark] " << cfg.region << ": " << rows.size() << " comparison rows over "
              << sums.actuals.size() << " years\n";
}

void stage_report(const RunConfig& cfg) {
    ReportInputs inputs;
    inputs.config_hash = config_hash(cfg);

    const std::string out = cfg.out_dir;
    auto exists = [&](const std::string& rel) { return fs::exists(fs::path(out) / rel); };

    std::vector<MetricsRow> metrics;
    if (exists("metrics.csv")) {
        CsvTable t = read_csv((fs::path(out) / "metrics.csv").string());
        const int cm = t.column("model"), cs = t.column("scenario"), cr = t.column("rmse"),
                  cn = t.column("nrmse"), c2 = t.column("r2"), ca = t.column("accuracy");
        for (const auto& r : t.rows)
            metrics.push_back({r[cm], r[cs],
                               Metrics{parse_double(r[cr]), parse_double(r[cn]),
                                       parse_double(r[c2]), parse_double(r[ca])}});
        inputs.metrics = &metrics;
    }

    CorrelationReport correlations;
    if (exists("correlations.csv")) {
        CsvTable t = read_csv((fs::path(out) / "correlations.csv").string());
        const int ck = t.column("kind"), cp = t.column("kpi"), cl = t.column("lag"),
                  cr = t.column("pearson"), cn = t.column("n");
        for (const auto& r : t.rows) {
            CorrelationEntry e{r[cp], static_cast<int>(parse_int(r[cl])), parse_double(r[cr]),
                               parse_int(r[cn])};
            (r[ck] == "alignment" ? correlations.alignment : correlations.by_kpi_lag).push_back(e);
        }
        inputs.correlations = &correlations;
    }

    std::vector<BenchmarkRow> benchmark;
    if (exists("benchmark_comparison.csv")) {
        CsvTable t = read_csv((fs::path(out) / "benchmark_comparison.csv").string());
        const int cy = t.column("year"), ca = t.column("actual_mhz"),
                  cp = t.column("predicted_mhz"), cb = t.column("benchmark"),
                  cv = t.column("benchmark_mhz"), cd = t.column("deviation"),
                  co = t.column("overpredicts");
        for (const auto& r : t.rows) {
            BenchmarkRow b;
            b.year = static_cast<int>(parse_int(r[cy]));
            b.actual_mhz = parse_double(r[ca]);
            b.predicted_mhz = parse_double(r[cp]);
            b.benchmark = r[cb];
            b.benchmark_mhz = parse_double(r[cv]);
            b.deviation = parse_double(r[cd]);
            b.overpredicts = r[co] == "1";
            benchmark.push_back(std::move(b));
        }
        inputs.benchmark = &benchmark;
    }

    std::vector<TransferRow> transfer;
    if (exists("transfer_report.csv")) {
        CsvTable t = read_csv((fs::path(out) / "transfer_report.csv").string());
        const int cs = t.column("source"), ct = t.column("target"),
                  cf = t.column("target_fraction"), cd = t.column("seed"),
                  cw = t.column("nrmse_with"), co = t.column("nrmse_without"),
                  cr = t.column("reduction");
        for (const auto& r : t.rows)
            transfer.push_back({r[cs], r[ct], parse_double(r[cf]), parse_u64(r[cd]),
                                parse_double(r[cw]), parse_double(r[co]), parse_double(r[cr])});
        inputs.transfer = &transfer;
    }

    // Plot series carry pre-formatted fields copied verbatim from the stage
    // files, which keeps the bundle byte-stable.
    const std::string proxy_path = region_dir(cfg, cfg.region) + "/proxy.csv";
    if (fs::exists(proxy_path)) {
        const RegionProfile& prof = cfg.profile(cfg.region);
        const WindowSpec win = cfg.window_spec(prof);
        std::vector<ProxyTarget> proxy = read_proxy_csv(proxy_path);
        std::map<int, double> total;
        for (const auto& p : proxy) total[p.window] += p.deployed_bw_mhz;
        PlotSeries s;
        s.filename = "proxy_growth.csv";
        s.header = {"window", "window_start", "total_deployed_mhz"};
        for (const auto& [w, v] : total)
            s.rows.push_back({std::to_string(w), format_iso8601(win.window_start(w)).substr(0, 10),
                              format_double(v)});
        inputs.plots.push_back(std::move(s));
    }

    if (inputs.correlations) {
        PlotSeries s;
        s.filename = "correlation_by_lag.csv";
        s.header = {"kpi", "lag", "pearson"};
        for (const auto& e : correlations.by_kpi_lag)
            s.rows.push_back({e.kpi, std::to_string(e.lag), format_double(e.r)});
        inputs.plots.push_back(std::move(s));
    }

    if (inputs.metrics) {
        PlotSeries s;
        s.filename = "model_accuracy.csv";
        s.header = {"model", "accuracy"};
        for (const auto& m : metrics)
            s.rows.push_back({m.model, format_double(m.metrics.accuracy)});
        inputs.plots.push_back(std::move(s));
    }

    if (inputs.benchmark) {
        // Wide per-year layout: one line per year with all four benchmarks.
        std::map<int, std::map<std::string, std::string>> by_year;
        std::map<int, std::pair<std::string, std::string>> levels;
        for (const auto& b : benchmark) {
            by_year[b.year][b.benchmark] = format_double(b.benchmark_mhz);
            levels[b.year] = {format_double(b.actual_mhz), format_double(b.predicted_mhz)};
        }
        PlotSeries s;
        s.filename = "benchmark_levels.csv";
        s.header = {"year",         "actual_mhz",      "predicted_mhz", "vanilla_high",
                    "vanilla_low",  "modernized_high", "modernized_low"};
        for (auto& [year, vals] : by_year)
            s.rows.push_back({std::to_string(year), levels[year].first, levels[year].second,
                              vals["vanilla_high"], vals["vanilla_low"], vals["modernized_high"],
                              vals["modernized_low"]});
        inputs.plots.push_back(std::move(s));
    }

    if (inputs.transfer) {
        PlotSeries s;
        s.filename = "transfer_gain.csv";
        s.header = {"seed", "nrmse_without", "nrmse_with", "reduction"};
        for (const auto& t : transfer)
            s.rows.push_back({std::to_string(t.seed), format_double(t.nrmse_without),
                              format_double(t.nrmse_with), format_double(t.reduction)});
        inputs.plots.push_back(std::move(s));
    }

    if (exists("acf_pacf.csv")) {
        CsvTable t = read_csv((fs::path(out) / "acf_pacf.csv").string());
        PlotSeries s;
        s.filename = "acf_pacf.csv";
        s.header = t.header;
        s.rows = t.rows;
        inputs.plots.push_back(std::move(s));
    }

    emit_report(inputs, (fs::path(out) / "report").string());
    std::cout << "[report] bundle written to " << (fs::path(out) / "report").string() << "\n";
}

void stage_all(const RunConfig& cfg) {
    stage_gen(cfg);
    stage_aggregate(cfg);
    stage_cleanse(cfg);
    stage_featurize(cfg);
    stage_correlate(cfg);
    stage_train(cfg);
    stage_transfer(cfg);
    stage_benchmark(cfg);
    stage_report(cfg);
}

}  // namespace bandcast
