#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "twinstream/errors.hpp"

namespace twinstream {

/// Full experiment description. Loaded from flat `key=value` text (one pair
/// per line, `#` comments, dotted key paths); unknown keys are rejected and
/// every invariant is checked at load time with the offending key path.
struct ScenarioConfig {
    std::uint64_t seed = 42;
    int n_users = 20;
    int n_categories = 4;
    int n_intervals = 50;
    double interval_s = 300.0;

    struct Encoder {
        int filters = 8;
        int taps = 3;
        int dim = 8;
        double lr = 0.01;
        int epochs = 50;
        int batch = 16;
        int window_points = 16;
        double horizon_s = 120.0;
        std::string weights;  // optional pre-trained weights path
    } encoder;

    struct Ddqn {
        int k_min = 1;
        int k_max = 8;
        double gamma = 0.9;
        double lambda = 0.1;
        double lr = 1e-3;
        int hidden = 32;
        int replay = 4096;
        int batch = 32;
        int sync = 64;
        double eps_start = 1.0;
        double eps_end = 0.05;
        double eps_fraction = 0.8;
        int episodes = 150;
        int steps_per_episode = 8;
        int restarts = 10;  // k-means++ seedings per grouping
        std::string weights;
    } ddqn;

    struct Abstraction {
        int bins = 20;
        double decay = 0.7;
        double alpha = 0.5;
        double beta = 0.1;
        int playlist_n = 64;
    } abstraction;

    struct Predictor {
        std::vector<double> ladder_bps{1e6, 2.5e6, 5e6, 8e6};
        double kappa = 50.0;      // cycles per output bit
        double segment_s = 2.0;
        double budget_hz = 1e7;   // per-group budget for representation selection
        int snr_window = 8;       // samples in the persistence forecast
    } predictor;

    struct Sim {
        double area_m = 2000.0;
        double v_min = 0.5;
        double v_max = 2.0;
        int n_bs = 4;
        double tx_dbm = 30.0;
        double noise_dbm = -90.0;
        double bs_bandwidth_hz = 2e7;
        double pl0_db = 40.0;
        double d0_m = 10.0;
        double path_loss_exp = 3.0;
        double shadow_sigma_db = 4.0;
        int n_videos = 200;
        double video_min_s = 10.0;
        double video_max_s = 40.0;
        std::vector<double> swipe_rate;  // per category; empty = built-in ramp
        double zipf_s = 0.8;
    } sim;

    struct Telemetry {
        double snr_period_s = 1.0;
        double location_period_s = 5.0;
        int capacity = 256;  // twin ring-buffer samples per track
    } telemetry;

    struct Norm {
        double snr_db_min = 0.0;
        double snr_db_max = 80.0;
    } norm;

    std::string trace_path;

    /// Grouping numbers never exceed the user count.
    int effective_k_max() const;

    /// Per-category base swipe rates: the configured list, or a geometric
    /// ramp from 0.02 to 0.15 so lower category indices are watched longest.
    std::vector<double> base_swipe_rates() const;
};

/// Parse and validate; throws IoFailure, ParseError (with line number) and
/// ValidationError (with key path).
ScenarioConfig load_config(const std::string& path);
ScenarioConfig parse_config_text(const std::string& text);
void validate_config(const ScenarioConfig& cfg);

}  // namespace twinstream
