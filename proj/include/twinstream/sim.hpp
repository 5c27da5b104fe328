#pragma once

#include <string>
#include <vector>

#include "twinstream/abstraction.hpp"
#include "twinstream/rng.hpp"

namespace twinstream {

struct MobilityArea {
    double x_min = 0.0;
    double x_max = 2000.0;
    double y_min = 0.0;
    double y_max = 2000.0;
};

/// Ground-truth user: random-waypoint mobility plus true (hidden) swiping
/// rates and preferences that drive behavior generation.
struct UserAgent {
    int user_id = -1;
    double x = 0.0, y = 0.0;
    double waypoint_x = 0.0, waypoint_y = 0.0;
    double speed = 0.0;                 // m/s
    std::vector<double> swipe_rate;     // per category, 1/s; 0 means never swipe
    PreferenceVector true_pref;
    int pref_label = 0;
};

struct BaseStation {
    int bs_id = -1;
    double x = 0.0, y = 0.0;
    double tx_dbm = 30.0;
    double noise_dbm = -90.0;
    double bandwidth_hz = 2e7;
};

struct PathLossParams {
    double pl0_db = 40.0;   // reference loss at d0
    double d0_m = 10.0;
    double exponent = 3.0;
    double shadow_sigma_db = 4.0;
};

/// Advance a random-waypoint agent by dt seconds: move toward the waypoint at
/// the current speed; on arrival draw a fresh waypoint uniform in the area
/// and a fresh speed uniform in [v_min, v_max]. dt <= 0 leaves the agent
/// unchanged.
void step_mobility(UserAgent& agent, double dt, const MobilityArea& area, double v_min,
                   double v_max, Rng& rng);

/// Log-distance path loss with the shadowing term supplied by the caller
/// (drawn once per user and interval):
/// snr = tx - (PL0 + 10*gamma*log10(max(d, d0)/d0)) + shadow - noise.
double snr_db(double x, double y, const BaseStation& bs, const PathLossParams& pl,
              double shadow_db);

/// Draw one user's watch outcome for a video: swipe time ~ Exponential(rate),
/// w = min(T, D), completed iff T >= D.
WatchRecord sample_watch(int user_id, const Video& video, double rate, Rng& rng);

/// One video of a group playlist with every member's drawn swipe time
/// (infinity = never swipes).
struct PlaybackVideo {
    int video_id = -1;
    int category = 0;
    double duration_s = 0.0;
    std::vector<double> member_swipe_s;
};

struct VideoPlayback {
    int video_id = -1;
    double play_s = 0.0;
    bool completed = false;   // reached the full duration
    bool truncated = false;   // cut off by the interval boundary
};

/// Metered consumption of one group over one interval.
struct ActualUsage {
    double bits = 0.0;
    double hz_s = 0.0;
    double cycles = 0.0;
    double play_s = 0.0;
    std::vector<VideoPlayback> videos;  // only videos that actually started
};

/// Play the group playlist against drawn member behavior: a video ends once
/// every member has swiped or it completes; the multicast stream continues
/// while anyone watches. Bits are metered at the planned spectral efficiency
/// (bits = eta * Hz*s exactly). Transcoding cycles cover the segments behind
/// the playhead plus a one-segment precache lookahead, capped at the video
/// duration; `transcoding` is false when the stored highest representation is
/// served.
ActualUsage meter_actual(const std::vector<PlaybackVideo>& playback, double bitrate_bps,
                         bool transcoding, double eta, double kappa, double segment_s,
                         double interval_s);

/// Parse a watch-trace CSV with header
/// `user_id,video_id,category,duration_s,watched_s`. Completion is implied by
/// watched_s == duration_s. Throws ParseError (malformed lines) and
/// InvalidRecord (w outside [0, D]).
std::vector<WatchRecord> parse_watch_trace(const std::string& path);

}  // namespace twinstream
