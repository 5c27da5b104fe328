#include "twinstream/world.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace twinstream {

namespace {

constexpr std::uint64_t kCatalogStream = 1;
constexpr std::uint64_t kAgentStream = 2;
constexpr std::uint64_t kShadowStream = 3;
constexpr std::uint64_t kBehaviorStream = 4;
constexpr std::uint64_t kMobilityStream = 5;
constexpr std::uint64_t kGroupingStream = 6;

/// Relabel groups by lexicographic centroid order so slot indices stay
/// geometrically stable across intervals.
GroupAssignment canonical_labels(GroupAssignment groups) {
    const int k = groups.k;
    std::vector<int> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        for (int c = 0; c < groups.centroids.cols; ++c) {
            const double va = groups.centroids.at(a, c);
            const double vb = groups.centroids.at(b, c);
            if (va != vb) return va < vb;
        }
        return a < b;
    });
    std::vector<int> rank(static_cast<std::size_t>(k));
    for (int slot = 0; slot < k; ++slot) rank[static_cast<std::size_t>(order[static_cast<std::size_t>(slot)])] = slot;

    Matrix centroids(k, groups.centroids.cols);
    for (int g = 0; g < k; ++g)
        for (int c = 0; c < groups.centroids.cols; ++c)
            centroids.at(rank[static_cast<std::size_t>(g)], c) = groups.centroids.at(g, c);
    groups.centroids = std::move(centroids);
    for (int& label : groups.labels) label = rank[static_cast<std::size_t>(label)];
    return groups;
}

}  // namespace

World::World(const ScenarioConfig& cfg)
    : cfg_(cfg),
      mobility_rng_(Rng(cfg.seed).split(kMobilityStream)),
      shadow_rng_(Rng(cfg.seed).split(kShadowStream)),
      behavior_rng_(Rng(cfg.seed).split(kBehaviorStream)),
      grouping_rng_(Rng(cfg.seed).split(kGroupingStream)) {
    for (std::size_t i = 0; i < cfg_.predictor.ladder_bps.size(); ++i)
        ladder_.reps.push_back({"r" + std::to_string(i), cfg_.predictor.ladder_bps[i]});

    bounds_.snr_db_min = cfg_.norm.snr_db_min;
    bounds_.snr_db_max = cfg_.norm.snr_db_max;
    bounds_.x_min = bounds_.y_min = 0.0;
    bounds_.x_max = bounds_.y_max = cfg_.sim.area_m;

    schedule_.snr_period_s = cfg_.telemetry.snr_period_s;
    schedule_.location_period_s = cfg_.telemetry.location_period_s;
    schedule_.watch_period_s = cfg_.interval_s;
    schedule_.preference_period_s = cfg_.interval_s;

    area_ = {0.0, cfg_.sim.area_m, 0.0, cfg_.sim.area_m};
    path_loss_ = {cfg_.sim.pl0_db, cfg_.sim.d0_m, cfg_.sim.path_loss_exp,
                  cfg_.sim.shadow_sigma_db};

    // Catalog: seeded categories and durations, Zipf popularity over a
    // shuffled rank assignment.
    Rng catalog_rng = Rng(cfg_.seed).split(kCatalogStream);
    std::vector<int> ranks(static_cast<std::size_t>(cfg_.sim.n_videos));
    std::iota(ranks.begin(), ranks.end(), 0);
    for (std::size_t i = ranks.size(); i > 1; --i)
        std::swap(ranks[i - 1], ranks[static_cast<std::size_t>(catalog_rng.bounded(i))]);
    for (int v = 0; v < cfg_.sim.n_videos; ++v) {
        Video video;
        video.id = v;
        video.category = static_cast<int>(catalog_rng.bounded(
            static_cast<std::uint64_t>(cfg_.n_categories)));
        video.duration_s = catalog_rng.uniform(cfg_.sim.video_min_s, cfg_.sim.video_max_s);
        video.popularity =
            1.0 / std::pow(1.0 + ranks[static_cast<std::size_t>(v)], cfg_.sim.zipf_s);
        catalog_.push_back(video);
    }

    // Agents with hidden preference-coupled swipe rates.
    Rng agent_rng = Rng(cfg_.seed).split(kAgentStream);
    const std::vector<double> base_rates = cfg_.base_swipe_rates();
    for (int u = 0; u < cfg_.n_users; ++u) {
        UserAgent agent;
        agent.user_id = u;
        agent.x = agent_rng.uniform(area_.x_min, area_.x_max);
        agent.y = agent_rng.uniform(area_.y_min, area_.y_max);
        agent.waypoint_x = agent_rng.uniform(area_.x_min, area_.x_max);
        agent.waypoint_y = agent_rng.uniform(area_.y_min, area_.y_max);
        agent.speed = agent_rng.uniform(cfg_.sim.v_min, cfg_.sim.v_max);
        agent.pref_label =
            static_cast<int>(agent_rng.bounded(static_cast<std::uint64_t>(cfg_.n_categories)));
        agent.true_pref.assign(static_cast<std::size_t>(cfg_.n_categories), 0.0);
        double sum = 0.0;
        for (int c = 0; c < cfg_.n_categories; ++c) {
            const double w = c == agent.pref_label ? agent_rng.uniform(0.5, 1.0)
                                                   : agent_rng.uniform(0.05, 0.3);
            agent.true_pref[static_cast<std::size_t>(c)] = w;
            sum += w;
        }
        for (double& w : agent.true_pref) w /= sum;
        agent.swipe_rate.assign(static_cast<std::size_t>(cfg_.n_categories), 0.0);
        for (int c = 0; c < cfg_.n_categories; ++c)
            agent.swipe_rate[static_cast<std::size_t>(c)] =
                base_rates[static_cast<std::size_t>(c)] *
                (1.25 - 0.5 * agent.true_pref[static_cast<std::size_t>(c)]);
        agents_.push_back(agent);
    }

    // Base stations on a square grid.
    const int grid = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(cfg_.sim.n_bs))));
    for (int b = 0; b < cfg_.sim.n_bs; ++b) {
        BaseStation bs;
        bs.bs_id = b;
        bs.x = cfg_.sim.area_m * ((b % grid) + 0.5) / grid;
        bs.y = cfg_.sim.area_m * ((b / grid) + 0.5) / grid;
        bs.tx_dbm = cfg_.sim.tx_dbm;
        bs.noise_dbm = cfg_.sim.noise_dbm;
        bs.bandwidth_hz = cfg_.sim.bs_bandwidth_hz;
        bss_.push_back(bs);
    }

    store_ = UdtStore(cfg_.n_categories);
    for (int u = 0; u < cfg_.n_users; ++u)
        store_.add_twin(u, schedule_, static_cast<std::size_t>(cfg_.telemetry.capacity));

    const int tracks = track_count(cfg_.n_categories);
    if (!cfg_.encoder.weights.empty()) {
        encoder_ = load_encoder(cfg_.encoder.weights);
        if (encoder_.tracks != tracks)
            throw ValidationError("encoder.weights: file expects " +
                                  std::to_string(encoder_.tracks) + " tracks, scenario has " +
                                  std::to_string(tracks));
    } else {
        EncoderHyper hyper;
        hyper.filters = cfg_.encoder.filters;
        hyper.taps = cfg_.encoder.taps;
        hyper.dim = cfg_.encoder.dim;
        hyper.seed = cfg_.seed;
        encoder_ = init_autoencoder(tracks, hyper).encoder;
    }

    const int slots = cfg_.effective_k_max();
    for (int g = 0; g < slots; ++g)
        group_cdfs_.emplace_back(cfg_.n_categories, cfg_.abstraction.bins);
    pending_records_.resize(static_cast<std::size_t>(slots));

    shadow_db_.assign(static_cast<std::size_t>(cfg_.n_users), 0.0);
    bs_of_.assign(static_cast<std::size_t>(cfg_.n_users), 0);

    ingest_registration_snapshot();

    // Bootstrap span: a single all-users group so twins accumulate telemetry
    // before the first scored interval.
    if (cfg_.n_users > 0) {
        std::vector<int> everyone(static_cast<std::size_t>(cfg_.n_users));
        std::iota(everyone.begin(), everyone.end(), 0);
        std::vector<GroupPlan> plans;
        plans.push_back(plan_group(everyone, 0));
        simulate_span(plans);
    } else {
        simulate_span({});
    }
}

void World::ingest_registration_snapshot() {
    for (UserAgent& agent : agents_) {
        UserDigitalTwin& twin = store_.twin(agent.user_id);
        int nearest = 0;
        double best = std::numeric_limits<double>::infinity();
        for (const BaseStation& bs : bss_) {
            const double d = std::hypot(agent.x - bs.x, agent.y - bs.y);
            if (d < best) {
                best = d;
                nearest = bs.bs_id;
            }
        }
        // Registration snapshot at t = 0: mean-path-loss channel, spawn
        // location, optimistic full-watch priors, declared preferences.
        twin.ingest(AttributeKind::channel_snr(),
                    {0.0, snr_db(agent.x, agent.y, bss_[static_cast<std::size_t>(nearest)],
                                 path_loss_, 0.0)});
        twin.ingest(AttributeKind::location_x(), {0.0, agent.x});
        twin.ingest(AttributeKind::location_y(), {0.0, agent.y});
        for (int c = 0; c < cfg_.n_categories; ++c) {
            twin.ingest(AttributeKind::watch_fraction(c), {0.0, 1.0});
            twin.ingest(AttributeKind::preference(c),
                        {0.0, agent.true_pref[static_cast<std::size_t>(c)]});
        }
    }
}

void World::refresh_channel_state() {
    for (const UserAgent& agent : agents_) {
        shadow_db_[static_cast<std::size_t>(agent.user_id)] =
            path_loss_.shadow_sigma_db > 0.0
                ? shadow_rng_.normal(0.0, path_loss_.shadow_sigma_db)
                : 0.0;
        int nearest = 0;
        double best = std::numeric_limits<double>::infinity();
        for (const BaseStation& bs : bss_) {
            const double d = std::hypot(agent.x - bs.x, agent.y - bs.y);
            if (d < best) {
                best = d;
                nearest = bs.bs_id;
            }
        }
        bs_of_[static_cast<std::size_t>(agent.user_id)] = nearest;
    }
}

double World::twin_snr_forecast(int user_id) const {
    const auto& track = store_.twin(user_id).track(AttributeKind::channel_snr());
    const std::size_t n = std::min<std::size_t>(
        track.size(), static_cast<std::size_t>(cfg_.predictor.snr_window));
    double acc = 0.0;
    for (std::size_t i = track.size() - n; i < track.size(); ++i) acc += track[i].value;
    return acc / static_cast<double>(n);
}

PreferenceVector World::twin_preference(int user_id) const {
    const UserDigitalTwin& twin = store_.twin(user_id);
    PreferenceVector pref(static_cast<std::size_t>(cfg_.n_categories), 0.0);
    for (int c = 0; c < cfg_.n_categories; ++c)
        pref[static_cast<std::size_t>(c)] = twin.track(AttributeKind::preference(c)).back().value;
    return pref;
}

void World::collect_active_users() {
    active_users_.clear();
    for (int u = 0; u < cfg_.n_users; ++u) {
        const UserDigitalTwin& twin = store_.twin(u);
        bool complete = true;
        for (int r = 0; r < track_count(cfg_.n_categories) && complete; ++r)
            complete = !twin.track_at(r).empty();
        if (complete) active_users_.push_back(u);
    }
}

Matrix World::encode_active_users() const {
    Matrix features(static_cast<int>(active_users_.size()), encoder_.dim);
    for (std::size_t i = 0; i < active_users_.size(); ++i) {
        const Matrix status = store_.twin(active_users_[i]).status_matrix(
            clock_, cfg_.encoder.horizon_s, cfg_.encoder.window_points, bounds_);
        const FeatureVector fv = encode(status, encoder_, active_users_[i]);
        for (int c = 0; c < encoder_.dim; ++c)
            features.at(static_cast<int>(i), c) = fv.values[static_cast<std::size_t>(c)];
    }
    return features;
}

std::vector<Matrix> World::status_dataset() const {
    std::vector<Matrix> out;
    for (int u = 0; u < cfg_.n_users; ++u) {
        const UserDigitalTwin& twin = store_.twin(u);
        bool complete = true;
        for (int r = 0; r < track_count(cfg_.n_categories) && complete; ++r)
            complete = !twin.track_at(r).empty();
        if (complete)
            out.push_back(twin.status_matrix(clock_, cfg_.encoder.horizon_s,
                                             cfg_.encoder.window_points, bounds_));
    }
    return out;
}

ClusterStateVec World::begin_interval() {
    collect_active_users();
    features_ = encode_active_users();
    interval_open_ = true;
    return cluster_state(features_, prev_wcss_ratio_, prev_k_, cfg_.effective_k_max(),
                         cfg_.n_users);
}

int World::max_k() const {
    const int active = interval_open_ ? features_.rows : cfg_.n_users;
    return std::max(1, std::min(cfg_.effective_k_max(), active));
}

World::GroupPlan World::plan_group(const std::vector<int>& members, int slot) {
    GroupPlan plan;
    plan.members = members;

    std::vector<double> forecasts;
    std::vector<PreferenceVector> prefs;
    forecasts.reserve(members.size());
    for (int u : members) {
        forecasts.push_back(twin_snr_forecast(u));
        prefs.push_back(twin_preference(u));
    }
    plan.eta = group_efficiency(forecasts);
    plan.representation = select_representation(ladder_, plan.eta, cfg_.predictor.budget_hz);

    const PreferenceVector group_pref = group_preference(prefs);
    const Playlist source =
        recommend(group_pref, catalog_, cfg_.abstraction.alpha, cfg_.abstraction.playlist_n);
    plan.playlist = build_playlist_for_interval(
        source, group_cdfs_[static_cast<std::size_t>(slot)], catalog_, cfg_.interval_s);

    const double bitrate = ladder_.at(plan.representation).bitrate_bps;
    plan.predicted_radio_hz = predict_radio(plan.playlist, bitrate, plan.eta, cfg_.interval_s);
    plan.predicted_compute_cps =
        predict_compute(plan.playlist, catalog_, ladder_, plan.representation,
                        cfg_.predictor.kappa, cfg_.predictor.segment_s, cfg_.interval_s);
    return plan;
}

std::vector<ActualUsage> World::simulate_span(const std::vector<GroupPlan>& plans) {
    refresh_channel_state();

    // Group playback: behavior draws happen in group order, member order, so
    // the whole span is reproducible.
    std::vector<ActualUsage> usages;
    for (std::size_t g = 0; g < plans.size(); ++g) {
        const GroupPlan& plan = plans[g];
        std::vector<PlaybackVideo> playback;
        for (int video_id : plan.playlist.video_ids) {
            const Video& video = catalog_video(catalog_, video_id);
            PlaybackVideo pv;
            pv.video_id = video.id;
            pv.category = video.category;
            pv.duration_s = video.duration_s;
            for (int u : plan.members) {
                const UserAgent& agent = agents_[static_cast<std::size_t>(u)];
                pv.member_swipe_s.push_back(behavior_rng_.exponential(
                    agent.swipe_rate[static_cast<std::size_t>(video.category)]));
            }
            playback.push_back(pv);
        }

        const double bitrate = ladder_.at(plan.representation).bitrate_bps;
        const bool transcoding = plan.representation != ladder_.highest();
        ActualUsage usage =
            meter_actual(playback, bitrate, transcoding, plan.eta, cfg_.predictor.kappa,
                         cfg_.predictor.segment_s, cfg_.interval_s);

        // Watch records: per-member swipes feed the twins, whole-group
        // playback records feed this slot's swipe CDF next interval.
        double video_start = 0.0;
        for (std::size_t i = 0; i < usage.videos.size(); ++i) {
            const VideoPlayback& vp = usage.videos[i];
            const PlaybackVideo& pv = playback[i];
            const double t_end = clock_ + video_start + vp.play_s;

            for (std::size_t m = 0; m < plan.members.size(); ++m) {
                const int u = plan.members[m];
                const double swipe = pv.member_swipe_s[m];
                WatchRecord r;
                r.user_id = u;
                r.video_id = pv.video_id;
                r.category = pv.category;
                r.duration_s = pv.duration_s;
                if (vp.completed) {
                    r.completed = swipe >= pv.duration_s;
                    r.watched_s = r.completed ? pv.duration_s : swipe;
                } else if (!vp.truncated) {
                    r.completed = false;
                    r.watched_s = std::min(swipe, vp.play_s);
                } else {
                    // Interval boundary cut the video: only resolved swipes count.
                    if (swipe >= vp.play_s) continue;
                    r.completed = false;
                    r.watched_s = swipe;
                }

                UserDigitalTwin& twin = store_.twin(u);
                twin.ingest(AttributeKind::watch_fraction(r.category),
                            {t_end, r.watched_s / r.duration_s});
                const PreferenceVector updated =
                    update_preference(twin_preference(u), r, cfg_.abstraction.beta);
                for (int c = 0; c < cfg_.n_categories; ++c)
                    twin.ingest(AttributeKind::preference(c),
                                {t_end, updated[static_cast<std::size_t>(c)]});
            }

            if (!vp.truncated && !plan.members.empty()) {
                WatchRecord group_record;
                group_record.user_id = plan.members.front();
                group_record.video_id = pv.video_id;
                group_record.category = pv.category;
                group_record.duration_s = pv.duration_s;
                group_record.watched_s = vp.completed ? pv.duration_s : vp.play_s;
                group_record.completed = vp.completed;
                pending_records_[g].push_back(group_record);
            }
            video_start += vp.play_s;
        }
        usages.push_back(std::move(usage));
    }

    // Mobility and channel telemetry across the span.
    const double dt = cfg_.telemetry.snr_period_s;
    const long long ticks = std::llround(cfg_.interval_s / dt);
    const long long loc_every =
        std::max<long long>(1, std::llround(cfg_.telemetry.location_period_s / dt));
    for (long long tick = 1; tick <= ticks; ++tick) {
        const double t = clock_ + static_cast<double>(tick) * dt;
        for (UserAgent& agent : agents_) {
            step_mobility(agent, dt, area_, cfg_.sim.v_min, cfg_.sim.v_max, mobility_rng_);
            UserDigitalTwin& twin = store_.twin(agent.user_id);
            const BaseStation& bs =
                bss_[static_cast<std::size_t>(bs_of_[static_cast<std::size_t>(agent.user_id)])];
            twin.ingest(AttributeKind::channel_snr(),
                        {t, snr_db(agent.x, agent.y, bs, path_loss_,
                                   shadow_db_[static_cast<std::size_t>(agent.user_id)])});
            if (tick % loc_every == 0) {
                twin.ingest(AttributeKind::location_x(), {t, agent.x});
                twin.ingest(AttributeKind::location_y(), {t, agent.y});
            }
        }
    }

    clock_ += cfg_.interval_s;
    return usages;
}

IntervalResult World::complete_interval(int k) {
    if (!interval_open_) throw Error("complete_interval without begin_interval");
    interval_open_ = false;

    IntervalResult result;
    result.state = cluster_state(features_, prev_wcss_ratio_, prev_k_, cfg_.effective_k_max(),
                                 cfg_.n_users);
    for (int u = 0; u < cfg_.n_users; ++u)
        if (std::find(active_users_.begin(), active_users_.end(), u) == active_users_.end())
            result.held_out_users.push_back(u);

    // Fold the previous span's group playback into the slot CDFs before they
    // drive this interval's predictions.
    for (std::size_t g = 0; g < group_cdfs_.size(); ++g) {
        if (pending_records_[g].empty()) continue;
        group_cdfs_[g] =
            update_swipe_cdf(pending_records_[g], group_cdfs_[g], cfg_.abstraction.decay);
        pending_records_[g].clear();
    }

    if (features_.rows == 0) {
        // Nobody to group: the span still advances (mobility and channel).
        simulate_span({});
        ++interval_index_;
        return result;
    }

    const int k_used = std::clamp(k, 1, max_k());
    GroupAssignment groups = construct_groups_best_of(features_, k_used,
                                                      cfg_.ddqn.restarts, grouping_rng_);
    groups = canonical_labels(groups);
    result.k = k_used;
    result.reward = cluster_reward(features_, groups, cfg_.ddqn.lambda, cfg_.effective_k_max());
    const double total_ss = total_sum_squares(features_);
    prev_wcss_ratio_ = total_ss > 0.0 ? groups.wcss / total_ss : 0.0;
    prev_k_ = k_used;

    std::vector<std::vector<int>> members(static_cast<std::size_t>(k_used));
    for (std::size_t i = 0; i < active_users_.size(); ++i)
        members[static_cast<std::size_t>(groups.labels[i])].push_back(active_users_[i]);

    std::vector<GroupPlan> plans;
    for (int g = 0; g < k_used; ++g) plans.push_back(plan_group(members[static_cast<std::size_t>(g)], g));

    for (int g = 0; g < k_used; ++g)
        for (int c = 0; c < cfg_.n_categories; ++c)
            for (int b = 0; b <= cfg_.abstraction.bins; ++b)
                result.cdf_rows.push_back(
                    {interval_index_, g, c,
                     static_cast<double>(b) / cfg_.abstraction.bins,
                     group_cdfs_[static_cast<std::size_t>(g)].f.at(c, b)});

    const std::vector<ActualUsage> usages = simulate_span(plans);

    for (int g = 0; g < k_used; ++g) {
        const GroupPlan& plan = plans[static_cast<std::size_t>(g)];
        const ActualUsage& usage = usages[static_cast<std::size_t>(g)];
        IntervalRow row;
        row.interval_index = interval_index_;
        row.group_id = g;
        row.n_members = static_cast<int>(plan.members.size());
        row.k = k_used;
        row.predicted_radio_hz = plan.predicted_radio_hz;
        row.actual_radio_hz = usage.hz_s / cfg_.interval_s;
        row.predicted_compute_cps = plan.predicted_compute_cps;
        row.actual_compute_cps = usage.cycles / cfg_.interval_s;
        row.accuracy_radio = accuracy(row.predicted_radio_hz, row.actual_radio_hz);
        row.accuracy_compute = accuracy(row.predicted_compute_cps, row.actual_compute_cps);
        result.rows.push_back(row);
    }

    ++interval_index_;
    return result;
}

IntervalResult World::run_next(const QNetwork& net, double epsilon, Rng& select_rng) {
    const ClusterStateVec state = begin_interval();
    const int k = select_k(net, state, epsilon, select_rng, max_k());
    return complete_interval(k);
}

}  // namespace twinstream
