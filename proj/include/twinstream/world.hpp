#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "twinstream/abstraction.hpp"
#include "twinstream/config.hpp"
#include "twinstream/encoder.hpp"
#include "twinstream/grouping.hpp"
#include "twinstream/predictor.hpp"
#include "twinstream/report.hpp"
#include "twinstream/sim.hpp"
#include "twinstream/udt.hpp"

namespace twinstream {

/// Outcome of one reservation interval: the grouping decision taken, its
/// clustering reward, and the per-group prediction-vs-actual rows.
struct IntervalResult {
    ClusterStateVec state{};
    int k = 0;
    double reward = 0.0;
    std::vector<IntervalRow> rows;
    std::vector<CdfRow> cdf_rows;
    std::vector<int> held_out_users;
};

/// Ground-truth generator and pipeline driver. Construction simulates one
/// bootstrap interval (single group, never scored) so twins carry telemetry;
/// each subsequent interval is a begin/complete pair:
///   begin_interval  — encode all users, produce the DDQN state
///   complete_interval — fold the previous span's watch records into the
///     group CDFs, cluster with the chosen K, predict the coming interval,
///     simulate its ground truth, and score the predictions.
/// Everything is deterministic given the scenario seed.
class World {
public:
    explicit World(const ScenarioConfig& cfg);

    ClusterStateVec begin_interval();
    IntervalResult complete_interval(int k);

    /// begin + epsilon-greedy K selection + complete.
    IntervalResult run_next(const QNetwork& net, double epsilon, Rng& select_rng);

    /// Largest K admissible this interval (bounded by active users).
    int max_k() const;

    int interval_index() const { return interval_index_; }
    const Catalog& catalog() const { return catalog_; }
    const UdtStore& store() const { return store_; }
    UdtStore& store_mutable() { return store_; }
    const SwipeCdf& group_cdf(int slot) const { return group_cdfs_[static_cast<std::size_t>(slot)]; }
    const EncoderWeights& encoder_weights() const { return encoder_; }

    /// Current status matrices of all active users (encoder training data).
    std::vector<Matrix> status_dataset() const;

private:
    struct GroupPlan {
        std::vector<int> members;
        int representation = 0;
        double eta = 1.0;
        IntervalPlaylist playlist;
        double predicted_radio_hz = 0.0;
        double predicted_compute_cps = 0.0;
    };

    void refresh_channel_state();
    void ingest_registration_snapshot();
    void collect_active_users();
    Matrix encode_active_users() const;
    GroupPlan plan_group(const std::vector<int>& members, int slot);
    std::vector<ActualUsage> simulate_span(const std::vector<GroupPlan>& plans);
    double twin_snr_forecast(int user_id) const;
    PreferenceVector twin_preference(int user_id) const;

    ScenarioConfig cfg_;
    BitrateLadder ladder_;
    NormalizationBounds bounds_;
    CollectionSchedule schedule_;
    MobilityArea area_;
    PathLossParams path_loss_;

    Catalog catalog_;
    std::vector<UserAgent> agents_;
    std::vector<BaseStation> bss_;
    UdtStore store_;
    EncoderWeights encoder_;

    std::vector<SwipeCdf> group_cdfs_;                       // one slot per group index
    std::vector<std::vector<WatchRecord>> pending_records_;  // last span's group records

    Rng mobility_rng_;
    Rng shadow_rng_;
    Rng behavior_rng_;
    Rng grouping_rng_;

    std::vector<double> shadow_db_;  // per user, redrawn each span
    std::vector<int> bs_of_;         // per user, re-associated each span

    double clock_ = 0.0;
    int interval_index_ = 0;
    double prev_wcss_ratio_ = 1.0;
    int prev_k_ = 1;

    bool interval_open_ = false;
    std::vector<int> active_users_;
    Matrix features_;
};

}  // namespace twinstream
