#include "twinstream/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace twinstream {

int ScenarioConfig::effective_k_max() const {
    return std::max(1, std::min(ddqn.k_max, n_users));
}

std::vector<double> ScenarioConfig::base_swipe_rates() const {
    if (!sim.swipe_rate.empty()) return sim.swipe_rate;
    std::vector<double> rates(static_cast<std::size_t>(n_categories));
    if (n_categories == 1) {
        rates[0] = 0.08;
        return rates;
    }
    for (int c = 0; c < n_categories; ++c)
        rates[static_cast<std::size_t>(c)] =
            0.02 * std::pow(7.5, static_cast<double>(c) / (n_categories - 1));
    return rates;
}

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

struct Setter {
    std::function<void(ScenarioConfig&, const std::string&)> apply;
};

long long to_int(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    long long out = 0;
    try {
        out = std::stoll(value, &used);
    } catch (const std::exception&) {
        throw ParseError(key + ": expected integer, got '" + value + "'");
    }
    if (used != value.size()) throw ParseError(key + ": expected integer, got '" + value + "'");
    return out;
}

double to_real(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(value, &used);
    } catch (const std::exception&) {
        throw ParseError(key + ": expected number, got '" + value + "'");
    }
    if (used != value.size()) throw ParseError(key + ": expected number, got '" + value + "'");
    return out;
}

std::vector<double> to_real_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::istringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_real(key, trim(item)));
    if (out.empty()) throw ParseError(key + ": expected a comma-separated list");
    return out;
}

const std::map<std::string, Setter>& registry() {
    static const std::map<std::string, Setter> table = [] {
        std::map<std::string, Setter> t;
        t["seed"] = Setter{[](ScenarioConfig& c, const std::string& v) {
            c.seed = static_cast<std::uint64_t>(to_int("seed", v));
        }};

        auto int_setter = [](const std::string& key, auto getter) {
            return Setter{[key, getter](ScenarioConfig& c, const std::string& v) {
                *getter(c) = static_cast<int>(to_int(key, v));
            }};
        };
        auto real_setter = [](const std::string& key, auto getter) {
            return Setter{[key, getter](ScenarioConfig& c, const std::string& v) {
                *getter(c) = to_real(key, v);
            }};
        };
        auto string_setter = [](auto getter) {
            return Setter{[getter](ScenarioConfig& c, const std::string& v) { *getter(c) = v; }};
        };
        auto list_setter = [](const std::string& key, auto getter) {
            return Setter{[key, getter](ScenarioConfig& c, const std::string& v) {
                *getter(c) = to_real_list(key, v);
            }};
        };

#define TS_INT(KEY, FIELD) t[KEY] = int_setter(KEY, [](ScenarioConfig& c) { return &(c.FIELD); })
#define TS_REAL(KEY, FIELD) t[KEY] = real_setter(KEY, [](ScenarioConfig& c) { return &(c.FIELD); })
#define TS_STR(KEY, FIELD) t[KEY] = string_setter([](ScenarioConfig& c) { return &(c.FIELD); })
#define TS_LIST(KEY, FIELD) t[KEY] = list_setter(KEY, [](ScenarioConfig& c) { return &(c.FIELD); })

        TS_INT("n_users", n_users);
        TS_INT("n_categories", n_categories);
        TS_INT("n_intervals", n_intervals);
        TS_REAL("interval_s", interval_s);

        TS_INT("encoder.filters", encoder.filters);
        TS_INT("encoder.taps", encoder.taps);
        TS_INT("encoder.dim", encoder.dim);
        TS_REAL("encoder.lr", encoder.lr);
        TS_INT("encoder.epochs", encoder.epochs);
        TS_INT("encoder.batch", encoder.batch);
        TS_INT("encoder.window_points", encoder.window_points);
        TS_REAL("encoder.horizon_s", encoder.horizon_s);
        TS_STR("encoder.weights", encoder.weights);

        TS_INT("ddqn.k_min", ddqn.k_min);
        TS_INT("ddqn.k_max", ddqn.k_max);
        TS_REAL("ddqn.gamma", ddqn.gamma);
        TS_REAL("ddqn.lambda", ddqn.lambda);
        TS_REAL("ddqn.lr", ddqn.lr);
        TS_INT("ddqn.hidden", ddqn.hidden);
        TS_INT("ddqn.replay", ddqn.replay);
        TS_INT("ddqn.batch", ddqn.batch);
        TS_INT("ddqn.sync", ddqn.sync);
        TS_REAL("ddqn.eps_start", ddqn.eps_start);
        TS_REAL("ddqn.eps_end", ddqn.eps_end);
        TS_REAL("ddqn.eps_fraction", ddqn.eps_fraction);
        TS_INT("ddqn.episodes", ddqn.episodes);
        TS_INT("ddqn.steps_per_episode", ddqn.steps_per_episode);
        TS_INT("ddqn.restarts", ddqn.restarts);
        TS_STR("ddqn.weights", ddqn.weights);

        TS_INT("abstraction.bins", abstraction.bins);
        TS_REAL("abstraction.decay", abstraction.decay);
        TS_REAL("abstraction.alpha", abstraction.alpha);
        TS_REAL("abstraction.beta", abstraction.beta);
        TS_INT("abstraction.playlist_n", abstraction.playlist_n);

        TS_LIST("predictor.ladder", predictor.ladder_bps);
        TS_REAL("predictor.kappa", predictor.kappa);
        TS_REAL("predictor.segment_s", predictor.segment_s);
        TS_REAL("predictor.budget_hz", predictor.budget_hz);
        TS_INT("predictor.snr_window", predictor.snr_window);

        TS_REAL("sim.area_m", sim.area_m);
        TS_REAL("sim.v_min", sim.v_min);
        TS_REAL("sim.v_max", sim.v_max);
        TS_INT("sim.n_bs", sim.n_bs);
        TS_REAL("sim.tx_dbm", sim.tx_dbm);
        TS_REAL("sim.noise_dbm", sim.noise_dbm);
        TS_REAL("sim.bs_bandwidth_hz", sim.bs_bandwidth_hz);
        TS_REAL("sim.pl0_db", sim.pl0_db);
        TS_REAL("sim.d0_m", sim.d0_m);
        TS_REAL("sim.path_loss_exp", sim.path_loss_exp);
        TS_REAL("sim.shadow_sigma_db", sim.shadow_sigma_db);
        TS_INT("sim.n_videos", sim.n_videos);
        TS_REAL("sim.video_min_s", sim.video_min_s);
        TS_REAL("sim.video_max_s", sim.video_max_s);
        TS_LIST("sim.swipe_rate", sim.swipe_rate);
        TS_REAL("sim.zipf_s", sim.zipf_s);

        TS_REAL("telemetry.snr_period_s", telemetry.snr_period_s);
        TS_REAL("telemetry.location_period_s", telemetry.location_period_s);
        TS_INT("udt.capacity", telemetry.capacity);

        TS_REAL("norm.snr_db_min", norm.snr_db_min);
        TS_REAL("norm.snr_db_max", norm.snr_db_max);

        TS_STR("trace.path", trace_path);

#undef TS_INT
#undef TS_REAL
#undef TS_STR
#undef TS_LIST
        return t;
    }();
    return table;
}

void check(bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ValidationError(key + ": " + what);
}

}  // namespace

void validate_config(const ScenarioConfig& cfg) {
    check(cfg.n_users >= 0, "n_users", "must be >= 0");
    check(cfg.n_categories >= 1, "n_categories", "must be >= 1");
    check(cfg.n_intervals >= 1, "n_intervals", "must be >= 1");
    check(cfg.interval_s > 0.0, "interval_s", "must be > 0");

    check(cfg.encoder.filters >= 1, "encoder.filters", "must be >= 1");
    check(cfg.encoder.taps >= 1 && cfg.encoder.taps % 2 == 1, "encoder.taps",
          "must be odd and >= 1");
    check(cfg.encoder.dim >= 1, "encoder.dim", "must be >= 1");
    check(cfg.encoder.lr > 0.0, "encoder.lr", "must be > 0");
    check(cfg.encoder.epochs >= 0, "encoder.epochs", "must be >= 0");
    check(cfg.encoder.batch >= 1, "encoder.batch", "must be >= 1");
    check(cfg.encoder.window_points >= 2, "encoder.window_points", "must be >= 2");
    check(cfg.encoder.horizon_s > 0.0, "encoder.horizon_s", "must be > 0");

    check(cfg.ddqn.k_min >= 1, "ddqn.k_min", "must be >= 1");
    check(cfg.ddqn.k_max >= cfg.ddqn.k_min, "ddqn.k_max", "must be >= ddqn.k_min");
    check(cfg.ddqn.gamma >= 0.0 && cfg.ddqn.gamma < 1.0, "ddqn.gamma", "must lie in [0, 1)");
    check(cfg.ddqn.lambda >= 0.0, "ddqn.lambda", "must be >= 0");
    check(cfg.ddqn.lr > 0.0, "ddqn.lr", "must be > 0");
    check(cfg.ddqn.hidden >= 1, "ddqn.hidden", "must be >= 1");
    check(cfg.ddqn.replay >= 1, "ddqn.replay", "must be >= 1");
    check(cfg.ddqn.batch >= 1, "ddqn.batch", "must be >= 1");
    check(cfg.ddqn.sync >= 1, "ddqn.sync", "must be >= 1");
    check(cfg.ddqn.eps_start >= 0.0 && cfg.ddqn.eps_start <= 1.0, "ddqn.eps_start",
          "must lie in [0, 1]");
    check(cfg.ddqn.eps_end >= 0.0 && cfg.ddqn.eps_end <= 1.0, "ddqn.eps_end",
          "must lie in [0, 1]");
    check(cfg.ddqn.eps_fraction > 0.0 && cfg.ddqn.eps_fraction <= 1.0, "ddqn.eps_fraction",
          "must lie in (0, 1]");
    check(cfg.ddqn.episodes >= 1, "ddqn.episodes", "must be >= 1");
    check(cfg.ddqn.steps_per_episode >= 1, "ddqn.steps_per_episode", "must be >= 1");
    check(cfg.ddqn.restarts >= 1, "ddqn.restarts", "must be >= 1");

    check(cfg.abstraction.bins >= 1, "abstraction.bins", "must be >= 1");
    check(cfg.abstraction.decay >= 0.0 && cfg.abstraction.decay < 1.0, "abstraction.decay",
          "must lie in [0, 1)");
    check(cfg.abstraction.alpha >= 0.0 && cfg.abstraction.alpha <= 1.0, "abstraction.alpha",
          "must lie in [0, 1]");
    check(cfg.abstraction.beta > 0.0 && cfg.abstraction.beta < 1.0, "abstraction.beta",
          "must lie in (0, 1)");
    check(cfg.abstraction.playlist_n >= 1, "abstraction.playlist_n", "must be >= 1");

    check(!cfg.predictor.ladder_bps.empty(), "predictor.ladder", "must not be empty");
    for (std::size_t i = 0; i < cfg.predictor.ladder_bps.size(); ++i) {
        check(cfg.predictor.ladder_bps[i] > 0.0, "predictor.ladder", "bitrates must be > 0");
        if (i > 0)
            check(cfg.predictor.ladder_bps[i] > cfg.predictor.ladder_bps[i - 1],
                  "predictor.ladder", "bitrates must strictly increase");
    }
    check(cfg.predictor.kappa > 0.0, "predictor.kappa", "must be > 0");
    check(cfg.predictor.segment_s > 0.0, "predictor.segment_s", "must be > 0");
    check(cfg.predictor.budget_hz > 0.0, "predictor.budget_hz", "must be > 0");
    check(cfg.predictor.snr_window >= 1, "predictor.snr_window", "must be >= 1");

    check(cfg.sim.area_m > 0.0, "sim.area_m", "must be > 0");
    check(cfg.sim.v_min >= 0.0, "sim.v_min", "must be >= 0");
    check(cfg.sim.v_max >= cfg.sim.v_min, "sim.v_max", "must be >= sim.v_min");
    check(cfg.sim.n_bs >= 1, "sim.n_bs", "must be >= 1");
    check(cfg.sim.bs_bandwidth_hz > 0.0, "sim.bs_bandwidth_hz", "must be > 0");
    check(cfg.sim.d0_m > 0.0, "sim.d0_m", "must be > 0");
    check(cfg.sim.path_loss_exp > 0.0, "sim.path_loss_exp", "must be > 0");
    check(cfg.sim.shadow_sigma_db >= 0.0, "sim.shadow_sigma_db", "must be >= 0");
    check(cfg.sim.n_videos >= 1, "sim.n_videos", "must be >= 1");
    check(cfg.sim.video_min_s > 0.0, "sim.video_min_s", "must be > 0");
    check(cfg.sim.video_max_s >= cfg.sim.video_min_s, "sim.video_max_s",
          "must be >= sim.video_min_s");
    if (!cfg.sim.swipe_rate.empty()) {
        check(static_cast<int>(cfg.sim.swipe_rate.size()) == cfg.n_categories,
              "sim.swipe_rate", "needs one rate per category");
        for (double r : cfg.sim.swipe_rate)
            check(r >= 0.0, "sim.swipe_rate", "rates must be >= 0");
    }
    check(cfg.sim.zipf_s >= 0.0, "sim.zipf_s", "must be >= 0");

    check(cfg.telemetry.snr_period_s > 0.0, "telemetry.snr_period_s", "must be > 0");
    check(cfg.telemetry.location_period_s >= cfg.telemetry.snr_period_s,
          "telemetry.location_period_s", "must be >= telemetry.snr_period_s");
    check(cfg.telemetry.location_period_s <= cfg.interval_s, "telemetry.location_period_s",
          "must be <= interval_s (behavioral attributes arrive once per interval)");
    check(cfg.telemetry.capacity >= 1, "udt.capacity", "must be >= 1");

    check(cfg.norm.snr_db_max > cfg.norm.snr_db_min, "norm.snr_db_max",
          "must exceed norm.snr_db_min");
}

ScenarioConfig parse_config_text(const std::string& text) {
    ScenarioConfig cfg;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("line " + std::to_string(line_no) + ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = registry().find(key);
        if (it == registry().end())
            throw ParseError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        try {
            it->second.apply(cfg, value);
        } catch (const ParseError& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    validate_config(cfg);
    return cfg;
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoFailure("cannot open config " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

}  // namespace twinstream
