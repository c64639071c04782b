#include <algorithm>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>
#include <string>

#include "bandcast/csv.hpp"
#include "bandcast/errors.hpp"
#include "bandcast/pipeline.hpp"
#include "bandcast/sha256.hpp"
#include "bandcast/timeutil.hpp"
#include "json.hpp"

namespace bandcast {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& path, const std::string& what) {
    throw ConfigError("config field '" + path + "' " + what);
}

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

const json* get(const json& obj, const std::string& key) {
    auto it = obj.find(key);
    return it == obj.end() || it->is_null() ? nullptr : &*it;
}

const json& need_object(const json& v, const std::string& path) {
    if (!v.is_object()) bad(path, "must be an object");
    return v;
}

// Unknown keys are rejected so typos fail loudly instead of silently keeping
// a default.
void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed)
            if (it.key() == a) {
                ok = true;
                break;
            }
        if (!ok) throw ConfigError("unknown config field '" + join(path, it.key()) + "'");
    }
}

double num_at(const json& obj, const std::string& path, const char* key, double defv) {
    const json* v = get(obj, key);
    if (!v) return defv;
    if (!v->is_number()) bad(join(path, key), "must be a number");
    return v->get<double>();
}

int int_at(const json& obj, const std::string& path, const char* key, int defv) {
    const json* v = get(obj, key);
    if (!v) return defv;
    if (!v->is_number_integer()) bad(join(path, key), "must be an integer");
    return v->get<int>();
}

bool bool_at(const json& obj, const std::string& path, const char* key, bool defv) {
    const json* v = get(obj, key);
    if (!v) return defv;
    if (!v->is_boolean()) bad(join(path, key), "must be a boolean");
    return v->get<bool>();
}

std::string str_at(const json& obj, const std::string& path, const char* key,
                   const std::string& defv) {
    const json* v = get(obj, key);
    if (!v) return defv;
    if (!v->is_string()) bad(join(path, key), "must be a string");
    return v->get<std::string>();
}

int kpi_index(const std::string& name, const std::string& path) {
    for (int i = 0; i < kNumKpis; ++i)
        if (name == kKpiNames[i]) return i;
    bad(join(path, name), "is not a KPI name");
}

void parse_weights(const json& obj, const std::string& path, const char* key,
                   std::array<double, kNumKpis>& out) {
    const json* v = get(obj, key);
    if (!v) return;
    const std::string p = join(path, key);
    need_object(*v, p);
    out.fill(0.0);
    for (auto it = v->begin(); it != v->end(); ++it) {
        int k = kpi_index(it.key(), p);
        if (!it->is_number()) bad(join(p, it.key()), "must be a number");
        out[static_cast<size_t>(k)] = it->get<double>();
    }
}

RegionProfile parse_profile(const json& v, const std::string& path) {
    need_object(v, path);
    check_keys(v, path,
               {"name", "lat_min", "lat_max", "lon_min", "lon_max", "tile_size_deg", "bands",
                "start_year", "end_year", "density", "density_radial"});
    RegionProfile p;
    p.name = str_at(v, path, "name", "");
    if (p.name.empty()) bad(join(path, "name"), "is required");
    p.lat_min = num_at(v, path, "lat_min", 0);
    p.lat_max = num_at(v, path, "lat_max", 0);
    p.lon_min = num_at(v, path, "lon_min", 0);
    p.lon_max = num_at(v, path, "lon_max", 0);
    p.tile_size_deg = num_at(v, path, "tile_size_deg", 0.01);
    p.start_year = int_at(v, path, "start_year", 2019);
    p.end_year = int_at(v, path, "end_year", 2023);
    if (p.tile_size_deg <= 0) bad(join(path, "tile_size_deg"), "must be positive");
    if (p.lat_max <= p.lat_min) bad(join(path, "lat_max"), "must exceed lat_min");
    if (p.lon_max <= p.lon_min) bad(join(path, "lon_max"), "must exceed lon_min");
    if (p.end_year < p.start_year) bad(join(path, "end_year"), "must be >= start_year");
    p.n_rows = static_cast<int>((p.lat_max - p.lat_min) / p.tile_size_deg + 1e-9);
    p.n_cols = static_cast<int>((p.lon_max - p.lon_min) / p.tile_size_deg + 1e-9);
    if (p.n_rows < 1 || p.n_cols < 1) bad(path, "bbox smaller than one tile");

    const json* bands = get(v, "bands");
    if (bands) {
        if (!bands->is_array() || bands->empty()) bad(join(path, "bands"), "must be a non-empty array");
        for (const auto& b : *bands) {
            if (!b.is_string()) bad(join(path, "bands"), "entries must be strings");
            p.bands.push_back(b.get<std::string>());
        }
    } else {
        p.bands = {"B700", "AWS"};
    }

    const json* dens = get(v, "density");
    const json* rad = get(v, "density_radial");
    if (dens && rad) bad(path, "sets both density and density_radial");
    if (dens) {
        if (!dens->is_array()) bad(join(path, "density"), "must be an array");
        for (const auto& d : *dens) {
            if (!d.is_number()) bad(join(path, "density"), "entries must be numbers");
            p.density.push_back(d.get<double>());
        }
        if (p.density.size() != static_cast<size_t>(p.n_rows) * p.n_cols)
            bad(join(path, "density"),
                "must have n_rows*n_cols = " + std::to_string(p.n_rows * p.n_cols) + " entries");
    } else {
        double core = 0.6, edge = 0.1, falloff = 2.5;
        if (rad) {
            const std::string rp = join(path, "density_radial");
            need_object(*rad, rp);
            check_keys(*rad, rp, {"core", "edge", "falloff"});
            core = num_at(*rad, rp, "core", core);
            edge = num_at(*rad, rp, "edge", edge);
            falloff = num_at(*rad, rp, "falloff", falloff);
        }
        if (core < 0 || core > 1) bad(join(path, "density_radial.core"), "must lie in [0, 1]");
        if (edge < 0 || edge > 1) bad(join(path, "density_radial.edge"), "must lie in [0, 1]");
        if (falloff < 0) bad(join(path, "density_radial.falloff"), "must be >= 0");
        radial_density(p, core, edge, falloff);
    }
    for (double d : p.density)
        if (d < 0 || d > 1) bad(join(path, "density"), "values must lie in [0, 1]");
    return p;
}

ModelSpec parse_model_spec(const json& v, const std::string& path, const ModelSpec& defv) {
    ModelSpec s = defv;
    need_object(v, path);
    check_keys(v, path, {"kind", "lambda", "tol", "max_iter"});
    s.kind = str_at(v, path, "kind", s.kind);
    s.lambda = num_at(v, path, "lambda", s.lambda);
    s.tol = num_at(v, path, "tol", s.tol);
    s.max_iter = int_at(v, path, "max_iter", s.max_iter);
    if (s.kind != "ols" && s.kind != "lasso") bad(join(path, "kind"), "must be 'ols' or 'lasso'");
    if (s.lambda < 0) bad(join(path, "lambda"), "must be >= 0");
    if (s.tol <= 0) bad(join(path, "tol"), "must be positive");
    if (s.max_iter < 1) bad(join(path, "max_iter"), "must be >= 1");
    return s;
}

// Applies one --set k=v override to the raw JSON tree. The value is parsed as
// JSON when possible, otherwise taken as a string.
void apply_override(json& root, const std::string& kv) {
    auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("--set expects key=value, got '" + kv + "'");
    std::string key = kv.substr(0, eq);
    std::string raw = kv.substr(eq + 1);
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;

    json* node = &root;
    size_t pos = 0;
    for (;;) {
        size_t dot = key.find('.', pos);
        std::string part = key.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
        if (part.empty()) throw ConfigError("--set key has an empty path segment: '" + key + "'");
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        node = &(*node)[part];
        if (!node->is_object() && !node->is_null())
            throw ConfigError("--set path '" + key + "' crosses a non-object value");
        pos = dot + 1;
    }
}

json weights_json(const std::array<double, kNumKpis>& w) {
    json out = json::object();
    for (int i = 0; i < kNumKpis; ++i)
        if (w[static_cast<size_t>(i)] != 0.0) out[kKpiNames[i]] = w[static_cast<size_t>(i)];
    return out;
}

}  // namespace

const RegionProfile& RunConfig::profile(const std::string& name) const {
    for (const auto& p : profiles)
        if (p.name == name) return p;
    throw ConfigError("region '" + name + "' is not defined");
}

WindowSpec RunConfig::window_spec(const RegionProfile& p) const {
    WindowSpec w;
    w.epoch = utc_seconds(p.start_year, 1, 1);
    w.span_months = span_months;
    w.stride_months = stride_months;
    return w;
}

int RunConfig::n_windows(const RegionProfile& p) const {
    const WindowSpec w = window_spec(p);
    const int64_t horizon = utc_seconds(p.end_year + 1, 1, 1);
    int n = 0;
    while (n < 100000 && w.window_end(n) <= horizon) ++n;
    return n;
}

std::vector<int> RunConfig::train_windows() const {
    std::vector<int> out;
    for (int w = train_from; w <= train_to; ++w) out.push_back(w);
    return out;
}

std::vector<int> RunConfig::test_windows() const {
    std::vector<int> out;
    for (int w = test_from; w <= test_to; ++w) out.push_back(w);
    return out;
}

std::vector<std::string> RunConfig::regions_used() const {
    std::vector<std::string> out;
    for (const std::string& r : {region, transfer.source_region, transfer.target_region})
        if (!r.empty() && std::find(out.begin(), out.end(), r) == out.end()) out.push_back(r);
    return out;
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides,
                      const std::optional<std::string>& out_override,
                      const std::optional<uint64_t>& seed_override,
                      const std::optional<int>& jobs_override) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingInputError("missing config file: " + path);
    json root;
    try {
        root = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path + " is not valid JSON: " + e.what());
    }
    need_object(root, "(config root)");
    for (const auto& kv : overrides) apply_override(root, kv);

    check_keys(root, "",
               {"seed", "region", "profiles", "windows", "coupling", "generator", "cleanse",
                "features", "split", "models", "transfer", "benchmarks", "out_dir", "notes"});

    RunConfig cfg;

    if (const json* v = get(root, "seed")) {
        if (!v->is_number_unsigned()) bad("seed", "must be a non-negative integer");
        cfg.seed = v->get<uint64_t>();
    }
    cfg.region = str_at(root, "", "region", cfg.region);
    cfg.out_dir = str_at(root, "", "out_dir", cfg.out_dir);

    cfg.profiles = builtin_profiles();
    if (const json* v = get(root, "profiles")) {
        if (!v->is_array()) bad("profiles", "must be an array");
        for (size_t i = 0; i < v->size(); ++i) {
            RegionProfile p = parse_profile((*v)[i], "profiles[" + std::to_string(i) + "]");
            auto it = std::find_if(cfg.profiles.begin(), cfg.profiles.end(),
                                   [&](const RegionProfile& q) { return q.name == p.name; });
            if (it != cfg.profiles.end())
                *it = p;  // config definition replaces the builtin
            else
                cfg.profiles.push_back(p);
        }
    }

    if (const json* v = get(root, "windows")) {
        const std::string p = "windows";
        need_object(*v, p);
        check_keys(*v, p, {"span_months", "stride_months"});
        cfg.span_months = int_at(*v, p, "span_months", cfg.span_months);
        cfg.stride_months = int_at(*v, p, "stride_months", cfg.stride_months);
        if (cfg.span_months < 1) bad("windows.span_months", "must be >= 1");
        if (cfg.stride_months < 1 || cfg.stride_months > cfg.span_months)
            bad("windows.stride_months", "must lie in [1, span_months]");
    }

    cfg.coupling = default_coupling();
    if (const json* v = get(root, "coupling")) {
        const std::string p = "coupling";
        need_object(*v, p);
        check_keys(*v, p,
                   {"weights_lag0", "weights_lag1", "weights_lag2", "noise_sigma",
                    "seasonal_amplitude", "trend_per_quarter"});
        parse_weights(*v, p, "weights_lag0", cfg.coupling.weights_lag0);
        parse_weights(*v, p, "weights_lag1", cfg.coupling.weights_lag1);
        parse_weights(*v, p, "weights_lag2", cfg.coupling.weights_lag2);
        cfg.coupling.noise_sigma = num_at(*v, p, "noise_sigma", cfg.coupling.noise_sigma);
        cfg.coupling.seasonal_amplitude =
            num_at(*v, p, "seasonal_amplitude", cfg.coupling.seasonal_amplitude);
        cfg.coupling.trend_per_quarter =
            num_at(*v, p, "trend_per_quarter", cfg.coupling.trend_per_quarter);
        if (cfg.coupling.noise_sigma < 0) bad("coupling.noise_sigma", "must be >= 0");
    }

    if (const json* v = get(root, "generator")) {
        const std::string p = "generator";
        need_object(*v, p);
        check_keys(*v, p,
                   {"base_samples", "bw_base_mhz", "driver_phi", "driver_sd", "device_pool_frac"});
        cfg.gen.base_samples = num_at(*v, p, "base_samples", cfg.gen.base_samples);
        cfg.gen.bw_base_mhz = num_at(*v, p, "bw_base_mhz", cfg.gen.bw_base_mhz);
        cfg.gen.driver_phi = num_at(*v, p, "driver_phi", cfg.gen.driver_phi);
        cfg.gen.driver_sd = num_at(*v, p, "driver_sd", cfg.gen.driver_sd);
        cfg.gen.device_pool_frac = num_at(*v, p, "device_pool_frac", cfg.gen.device_pool_frac);
        if (cfg.gen.base_samples <= 0) bad("generator.base_samples", "must be positive");
        if (std::abs(cfg.gen.driver_phi) >= 1)
            bad("generator.driver_phi", "must satisfy |phi| < 1 (stationarity)");
        if (cfg.gen.driver_sd <= 0) bad("generator.driver_sd", "must be positive");
        if (cfg.gen.device_pool_frac <= 0) bad("generator.device_pool_frac", "must be positive");
    }

    if (const json* v = get(root, "cleanse")) {
        const std::string p = "cleanse";
        need_object(*v, p);
        check_keys(*v, p,
                   {"max_short_gap", "ma_window", "iqr_k", "z_thresh", "winsor_lower_pct",
                    "winsor_upper_pct"});
        cfg.cleanse.max_short_gap = int_at(*v, p, "max_short_gap", cfg.cleanse.max_short_gap);
        cfg.cleanse.ma_window = int_at(*v, p, "ma_window", cfg.cleanse.ma_window);
        cfg.cleanse.iqr_k = num_at(*v, p, "iqr_k", cfg.cleanse.iqr_k);
        cfg.cleanse.z_thresh = num_at(*v, p, "z_thresh", cfg.cleanse.z_thresh);
        cfg.cleanse.winsor_lower_pct =
            num_at(*v, p, "winsor_lower_pct", cfg.cleanse.winsor_lower_pct);
        cfg.cleanse.winsor_upper_pct =
            num_at(*v, p, "winsor_upper_pct", cfg.cleanse.winsor_upper_pct);
        if (cfg.cleanse.max_short_gap < 0) bad("cleanse.max_short_gap", "must be >= 0");
        if (cfg.cleanse.ma_window < 1) bad("cleanse.ma_window", "must be >= 1");
        if (cfg.cleanse.iqr_k <= 0) bad("cleanse.iqr_k", "must be positive");
        if (cfg.cleanse.z_thresh <= 0) bad("cleanse.z_thresh", "must be positive");
        if (cfg.cleanse.winsor_lower_pct < 0 || cfg.cleanse.winsor_upper_pct > 100 ||
            cfg.cleanse.winsor_lower_pct >= cfg.cleanse.winsor_upper_pct)
            bad("cleanse.winsor_lower_pct", "and winsor_upper_pct must satisfy 0 <= lo < hi <= 100");
    }

    if (const json* v = get(root, "features")) {
        const std::string p = "features";
        need_object(*v, p);
        check_keys(*v, p, {"lags", "acf_max_lag"});
        if (const json* lv = get(*v, "lags")) {
            if (!lv->is_array() || lv->empty()) bad("features.lags", "must be a non-empty array");
            cfg.lags.clear();
            for (const auto& l : *lv) {
                if (!l.is_number_integer()) bad("features.lags", "entries must be integers");
                cfg.lags.push_back(l.get<int>());
            }
            for (size_t i = 0; i < cfg.lags.size(); ++i) {
                if (cfg.lags[i] < 0) bad("features.lags", "entries must be >= 0");
                if (i && cfg.lags[i] <= cfg.lags[i - 1])
                    bad("features.lags", "must be strictly increasing");
            }
        }
        cfg.acf_max_lag = int_at(*v, p, "acf_max_lag", cfg.acf_max_lag);
        if (cfg.acf_max_lag < 1) bad("features.acf_max_lag", "must be >= 1");
    }

    if (const json* v = get(root, "split")) {
        const std::string p = "split";
        need_object(*v, p);
        check_keys(*v, p, {"train", "test"});
        auto range = [&](const char* key, int& from, int& to) {
            if (const json* rv = get(*v, key)) {
                const std::string rp = join(p, key);
                need_object(*rv, rp);
                check_keys(*rv, rp, {"from", "to"});
                from = int_at(*rv, rp, "from", from);
                to = int_at(*rv, rp, "to", to);
                if (from < 0) bad(join(rp, "from"), "must be >= 0");
                if (to < from) bad(join(rp, "to"), "must be >= from");
            }
        };
        range("train", cfg.train_from, cfg.train_to);
        range("test", cfg.test_from, cfg.test_to);
    }
    if (cfg.test_from <= cfg.train_to)
        bad("split.test.from", "must come after the last train window");

    if (const json* v = get(root, "models")) {
        const std::string p = "models";
        need_object(*v, p);
        check_keys(*v, p, {"ols", "lasso", "tree", "forest", "gbm"});
        if (const json* m = get(*v, "ols")) {
            need_object(*m, "models.ols");
            check_keys(*m, "models.ols", {});
        }
        if (const json* m = get(*v, "lasso")) {
            const std::string mp = "models.lasso";
            need_object(*m, mp);
            check_keys(*m, mp, {"lambda", "tol", "max_iter"});
            cfg.lasso_lambda = num_at(*m, mp, "lambda", cfg.lasso_lambda);
            cfg.lasso_tol = num_at(*m, mp, "tol", cfg.lasso_tol);
            cfg.lasso_max_iter = int_at(*m, mp, "max_iter", cfg.lasso_max_iter);
            if (cfg.lasso_lambda < 0) bad("models.lasso.lambda", "must be >= 0");
            if (cfg.lasso_tol <= 0) bad("models.lasso.tol", "must be positive");
            if (cfg.lasso_max_iter < 1) bad("models.lasso.max_iter", "must be >= 1");
        }
        if (const json* m = get(*v, "tree")) {
            const std::string mp = "models.tree";
            need_object(*m, mp);
            check_keys(*m, mp, {"max_depth", "min_leaf"});
            cfg.tree_max_depth = int_at(*m, mp, "max_depth", cfg.tree_max_depth);
            cfg.tree_min_leaf = int_at(*m, mp, "min_leaf", cfg.tree_min_leaf);
            if (cfg.tree_max_depth < 1) bad("models.tree.max_depth", "must be >= 1");
            if (cfg.tree_min_leaf < 1) bad("models.tree.min_leaf", "must be >= 1");
        }
        if (const json* m = get(*v, "forest")) {
            const std::string mp = "models.forest";
            need_object(*m, mp);
            check_keys(*m, mp, {"n_trees", "max_depth", "min_leaf", "feature_frac"});
            cfg.forest_trees = int_at(*m, mp, "n_trees", cfg.forest_trees);
            cfg.forest_max_depth = int_at(*m, mp, "max_depth", cfg.forest_max_depth);
            cfg.forest_min_leaf = int_at(*m, mp, "min_leaf", cfg.forest_min_leaf);
            cfg.forest_feature_frac = num_at(*m, mp, "feature_frac", cfg.forest_feature_frac);
            if (cfg.forest_trees < 1) bad("models.forest.n_trees", "must be >= 1");
            if (cfg.forest_max_depth < 1) bad("models.forest.max_depth", "must be >= 1");
            if (cfg.forest_min_leaf < 1) bad("models.forest.min_leaf", "must be >= 1");
            if (cfg.forest_feature_frac <= 0 || cfg.forest_feature_frac > 1)
                bad("models.forest.feature_frac", "must lie in (0, 1]");
        }
        if (const json* m = get(*v, "gbm")) {
            const std::string mp = "models.gbm";
            need_object(*m, mp);
            check_keys(*m, mp, {"n_rounds", "learning_rate", "max_depth", "min_leaf"});
            cfg.gbm_rounds = int_at(*m, mp, "n_rounds", cfg.gbm_rounds);
            cfg.gbm_learning_rate = num_at(*m, mp, "learning_rate", cfg.gbm_learning_rate);
            cfg.gbm_max_depth = int_at(*m, mp, "max_depth", cfg.gbm_max_depth);
            cfg.gbm_min_leaf = int_at(*m, mp, "min_leaf", cfg.gbm_min_leaf);
            if (cfg.gbm_rounds < 1) bad("models.gbm.n_rounds", "must be >= 1");
            if (cfg.gbm_learning_rate <= 0 || cfg.gbm_learning_rate > 1)
                bad("models.gbm.learning_rate", "must lie in (0, 1]");
            if (cfg.gbm_max_depth < 1) bad("models.gbm.max_depth", "must be >= 1");
            if (cfg.gbm_min_leaf < 1) bad("models.gbm.min_leaf", "must be >= 1");
        }
    }

    cfg.transfer.source_region = "toronto-like";
    cfg.transfer.target_region = "ottawa-like";
    cfg.transfer.frozen_features = {"*"};
    cfg.transfer.target_fraction = 0.25;
    cfg.transfer.fine_tune_model = ModelSpec{"lasso", 1.0, 1e-7, 10000};
    if (const json* v = get(root, "transfer")) {
        const std::string p = "transfer";
        need_object(*v, p);
        check_keys(*v, p,
                   {"source_region", "target_region", "source_model", "fine_tune_model",
                    "frozen_features", "target_fraction", "unfreeze_passes", "freeze_intercept",
                    "include_source_estimate", "n_seeds"});
        cfg.transfer.source_region = str_at(*v, p, "source_region", cfg.transfer.source_region);
        cfg.transfer.target_region = str_at(*v, p, "target_region", cfg.transfer.target_region);
        if (const json* m = get(*v, "source_model"))
            cfg.source_model = parse_model_spec(*m, "transfer.source_model", cfg.source_model);
        if (const json* m = get(*v, "fine_tune_model"))
            cfg.transfer.fine_tune_model =
                parse_model_spec(*m, "transfer.fine_tune_model", cfg.transfer.fine_tune_model);
        if (const json* f = get(*v, "frozen_features")) {
            if (!f->is_array()) bad("transfer.frozen_features", "must be an array");
            cfg.transfer.frozen_features.clear();
            for (const auto& s : *f) {
                if (!s.is_string()) bad("transfer.frozen_features", "entries must be strings");
                cfg.transfer.frozen_features.push_back(s.get<std::string>());
            }
        }
        cfg.transfer.target_fraction =
            num_at(*v, p, "target_fraction", cfg.transfer.target_fraction);
        cfg.transfer.unfreeze_passes =
            int_at(*v, p, "unfreeze_passes", cfg.transfer.unfreeze_passes);
        cfg.transfer.freeze_intercept =
            bool_at(*v, p, "freeze_intercept", cfg.transfer.freeze_intercept);
        cfg.transfer.include_source_estimate =
            bool_at(*v, p, "include_source_estimate", cfg.transfer.include_source_estimate);
        cfg.transfer_seeds = int_at(*v, p, "n_seeds", cfg.transfer_seeds);
        if (cfg.transfer.target_fraction <= 0 || cfg.transfer.target_fraction > 1)
            bad("transfer.target_fraction", "must lie in (0, 1]");
        if (cfg.transfer.unfreeze_passes < 0) bad("transfer.unfreeze_passes", "must be >= 0");
        if (cfg.transfer_seeds < 1) bad("transfer.n_seeds", "must be >= 1");
    }

    // Illustrative defaults; the ITU formulas themselves are not modeled.
    cfg.benchmarks = {6000.0, 4600.0, 5000.0, 4100.0, 2023};
    if (const json* v = get(root, "benchmarks")) {
        const std::string p = "benchmarks";
        need_object(*v, p);
        check_keys(*v, p,
                   {"vanilla_high", "vanilla_low", "modernized_high", "modernized_low",
                    "reference_year"});
        cfg.benchmarks.vanilla_high = num_at(*v, p, "vanilla_high", cfg.benchmarks.vanilla_high);
        cfg.benchmarks.vanilla_low = num_at(*v, p, "vanilla_low", cfg.benchmarks.vanilla_low);
        cfg.benchmarks.modernized_high =
            num_at(*v, p, "modernized_high", cfg.benchmarks.modernized_high);
        cfg.benchmarks.modernized_low =
            num_at(*v, p, "modernized_low", cfg.benchmarks.modernized_low);
        cfg.benchmarks.reference_year =
            int_at(*v, p, "reference_year", cfg.benchmarks.reference_year);
        if (cfg.benchmarks.vanilla_high <= 0 || cfg.benchmarks.vanilla_low <= 0 ||
            cfg.benchmarks.modernized_high <= 0 || cfg.benchmarks.modernized_low <= 0)
            bad("benchmarks", "values must be positive");
        if (cfg.benchmarks.vanilla_high < cfg.benchmarks.vanilla_low)
            bad("benchmarks.vanilla_high", "must be >= vanilla_low");
        if (cfg.benchmarks.modernized_high < cfg.benchmarks.modernized_low)
            bad("benchmarks.modernized_high", "must be >= modernized_low");
    }

    if (seed_override) cfg.seed = *seed_override;
    if (out_override) cfg.out_dir = *out_override;
    if (jobs_override) {
        if (*jobs_override < 1) throw ConfigError("--jobs must be >= 1");
        cfg.jobs = *jobs_override;
    }

    // Cross-field checks once everything is known.
    (void)cfg.profile(cfg.region);
    (void)cfg.profile(cfg.transfer.source_region);
    (void)cfg.profile(cfg.transfer.target_region);
    for (const std::string& name : cfg.regions_used()) {
        const RegionProfile& p = cfg.profile(name);
        const int nw = cfg.n_windows(p);
        int max_lag = cfg.lags.back();
        if (nw < max_lag + 2)
            bad("windows", "region '" + name + "' yields only " + std::to_string(nw) +
                               " windows, need at least " + std::to_string(max_lag + 2));
        if (cfg.test_to >= nw)
            bad("split.test.to", "exceeds the last window index " + std::to_string(nw - 1) +
                                     " of region '" + name + "'");
        if (cfg.train_from < max_lag)
            bad("split.train.from",
                "must be >= the largest lag (" + std::to_string(max_lag) + ")");
    }
    return cfg;
}

std::string canonical_config_json(const RunConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["region"] = cfg.region;
    j["windows"] = {{"span_months", cfg.span_months}, {"stride_months", cfg.stride_months}};

    json profiles = json::array();
    std::vector<std::string> names = cfg.regions_used();
    std::sort(names.begin(), names.end());
    for (const std::string& name : names) {
        const RegionProfile& p = cfg.profile(name);
        json pj;
        pj["name"] = p.name;
        pj["lat_min"] = p.lat_min;
        pj["lat_max"] = p.lat_max;
        pj["lon_min"] = p.lon_min;
        pj["lon_max"] = p.lon_max;
        pj["tile_size_deg"] = p.tile_size_deg;
        pj["n_rows"] = p.n_rows;
        pj["n_cols"] = p.n_cols;
        pj["bands"] = p.bands;
        pj["start_year"] = p.start_year;
        pj["end_year"] = p.end_year;
        pj["density"] = p.density;
        profiles.push_back(pj);
    }
    j["profiles"] = profiles;

    j["coupling"] = {{"weights_lag0", weights_json(cfg.coupling.weights_lag0)},
                     {"weights_lag1", weights_json(cfg.coupling.weights_lag1)},
                     {"weights_lag2", weights_json(cfg.coupling.weights_lag2)},
                     {"noise_sigma", cfg.coupling.noise_sigma},
                     {"seasonal_amplitude", cfg.coupling.seasonal_amplitude},
                     {"trend_per_quarter", cfg.coupling.trend_per_quarter}};
    j["generator"] = {{"base_samples", cfg.gen.base_samples},
                      {"bw_base_mhz", cfg.gen.bw_base_mhz},
                      {"driver_phi", cfg.gen.driver_phi},
                      {"driver_sd", cfg.gen.driver_sd},
                      {"device_pool_frac", cfg.gen.device_pool_frac}};
    j["cleanse"] = {{"max_short_gap", cfg.cleanse.max_short_gap},
                    {"ma_window", cfg.cleanse.ma_window},
                    {"iqr_k", cfg.cleanse.iqr_k},
                    {"z_thresh", cfg.cleanse.z_thresh},
                    {"winsor_lower_pct", cfg.cleanse.winsor_lower_pct},
                    {"winsor_upper_pct", cfg.cleanse.winsor_upper_pct}};
    j["features"] = {{"lags", cfg.lags}, {"acf_max_lag", cfg.acf_max_lag}};
    j["split"] = {{"train", {{"from", cfg.train_from}, {"to", cfg.train_to}}},
                  {"test", {{"from", cfg.test_from}, {"to", cfg.test_to}}}};
    j["models"] = {
        {"lasso",
         {{"lambda", cfg.lasso_lambda}, {"tol", cfg.lasso_tol}, {"max_iter", cfg.lasso_max_iter}}},
        {"tree", {{"max_depth", cfg.tree_max_depth}, {"min_leaf", cfg.tree_min_leaf}}},
        {"forest",
         {{"n_trees", cfg.forest_trees},
          {"max_depth", cfg.forest_max_depth},
          {"min_leaf", cfg.forest_min_leaf},
          {"feature_frac", cfg.forest_feature_frac}}},
        {"gbm",
         {{"n_rounds", cfg.gbm_rounds},
          {"learning_rate", cfg.gbm_learning_rate},
          {"max_depth", cfg.gbm_max_depth},
          {"min_leaf", cfg.gbm_min_leaf}}}};
    j["transfer"] = {{"source_region", cfg.transfer.source_region},
                     {"target_region", cfg.transfer.target_region},
                     {"source_model",
                      {{"kind", cfg.source_model.kind},
                       {"lambda", cfg.source_model.lambda},
                       {"tol", cfg.source_model.tol},
                       {"max_iter", cfg.source_model.max_iter}}},
                     {"fine_tune_model",
                      {{"kind", cfg.transfer.fine_tune_model.kind},
                       {"lambda", cfg.transfer.fine_tune_model.lambda},
                       {"tol", cfg.transfer.fine_tune_model.tol},
                       {"max_iter", cfg.transfer.fine_tune_model.max_iter}}},
                     {"frozen_features", cfg.transfer.frozen_features},
                     {"target_fraction", cfg.transfer.target_fraction},
                     {"unfreeze_passes", cfg.transfer.unfreeze_passes},
                     {"freeze_intercept", cfg.transfer.freeze_intercept},
                     {"include_source_estimate", cfg.transfer.include_source_estimate},
                     {"n_seeds", cfg.transfer_seeds}};
    j["benchmarks"] = {{"vanilla_high", cfg.benchmarks.vanilla_high},
                       {"vanilla_low", cfg.benchmarks.vanilla_low},
                       {"modernized_high", cfg.benchmarks.modernized_high},
                       {"modernized_low", cfg.benchmarks.modernized_low},
                       {"reference_year", cfg.benchmarks.reference_year}};
    return j.dump();
}

std::string config_hash(const RunConfig& cfg) { return sha256_hex(canonical_config_json(cfg)); }

void write_run_meta(const RunConfig& cfg) {
    std::filesystem::create_directories(cfg.out_dir);
    json meta;
    meta["config_hash"] = config_hash(cfg);
    meta["seed"] = cfg.seed;
    meta["toolkit_version"] = "0.1.0";
    meta["format_version"] = 1;
    const std::string text = meta.dump(2) + "\n";
    std::filesystem::path p = std::filesystem::path(cfg.out_dir) / "run_meta.json";
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + p.string());
    out << text;
    out.close();
    if (!out) throw IoError("write failed: " + p.string());
}

}  // namespace bandcast
