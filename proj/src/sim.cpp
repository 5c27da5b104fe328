#include "twinstream/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "twinstream/errors.hpp"

namespace twinstream {

void step_mobility(UserAgent& agent, double dt, const MobilityArea& area, double v_min,
                   double v_max, Rng& rng) {
    if (dt <= 0.0) return;
    const double dx = agent.waypoint_x - agent.x;
    const double dy = agent.waypoint_y - agent.y;
    const double dist = std::hypot(dx, dy);
    const double travel = agent.speed * dt;
    if (travel < dist) {
        agent.x += dx / dist * travel;
        agent.y += dy / dist * travel;
        return;
    }
    // Arrived: land on the waypoint, then draw the next leg.
    agent.x = agent.waypoint_x;
    agent.y = agent.waypoint_y;
    agent.waypoint_x = rng.uniform(area.x_min, area.x_max);
    agent.waypoint_y = rng.uniform(area.y_min, area.y_max);
    agent.speed = rng.uniform(v_min, v_max);
}

double snr_db(double x, double y, const BaseStation& bs, const PathLossParams& pl,
              double shadow_db) {
    const double d = std::max(std::hypot(x - bs.x, y - bs.y), pl.d0_m);
    const double path_loss = pl.pl0_db + 10.0 * pl.exponent * std::log10(d / pl.d0_m);
    return bs.tx_dbm - path_loss + shadow_db - bs.noise_dbm;
}

WatchRecord sample_watch(int user_id, const Video& video, double rate, Rng& rng) {
    const double swipe_t = rng.exponential(rate);
    WatchRecord r;
    r.user_id = user_id;
    r.video_id = video.id;
    r.category = video.category;
    r.duration_s = video.duration_s;
    r.completed = swipe_t >= video.duration_s;
    r.watched_s = r.completed ? video.duration_s : swipe_t;
    return r;
}

ActualUsage meter_actual(const std::vector<PlaybackVideo>& playback, double bitrate_bps,
                         bool transcoding, double eta, double kappa, double segment_s,
                         double interval_s) {
    ActualUsage usage;
    double clock = 0.0;
    for (const PlaybackVideo& video : playback) {
        if (clock >= interval_s) break;
        if (video.member_swipe_s.empty()) throw EmptyGroup("playback video has no members");

        double last_leaver = 0.0;
        for (double t : video.member_swipe_s) last_leaver = std::max(last_leaver, t);
        const double natural_end = std::min(last_leaver, video.duration_s);
        const double remaining = interval_s - clock;

        VideoPlayback vp;
        vp.video_id = video.video_id;
        vp.truncated = natural_end > remaining;
        vp.play_s = std::max(std::min(natural_end, remaining), 1e-9);
        vp.completed = !vp.truncated && natural_end >= video.duration_s;

        usage.bits += bitrate_bps * vp.play_s;
        if (transcoding) {
            // Segments behind the playhead, plus one precached ahead unless the
            // video ran to completion; never more than the video holds.
            const double total_segments = std::ceil(video.duration_s / segment_s);
            double segments = std::ceil(vp.play_s / segment_s);
            if (!vp.completed) segments += 1.0;
            segments = std::min(segments, total_segments);
            usage.cycles += kappa * bitrate_bps * std::min(segments * segment_s, video.duration_s);
        }
        usage.play_s += vp.play_s;
        clock += vp.play_s;
        usage.videos.push_back(vp);
    }
    usage.hz_s = usage.bits / eta;
    return usage;
}

std::vector<WatchRecord> parse_watch_trace(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoFailure("cannot open trace " + path);

    std::string line;
    if (!std::getline(f, line)) throw ParseError("trace " + path + " is empty");
    if (line != "user_id,video_id,category,duration_s,watched_s")
        throw ParseError("trace header mismatch in " + path);

    std::vector<WatchRecord> records;
    int line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 5)
            throw ParseError("trace line " + std::to_string(line_no) + ": expected 5 fields");
        WatchRecord r;
        try {
            r.user_id = std::stoi(fields[0]);
            r.video_id = std::stoi(fields[1]);
            r.category = std::stoi(fields[2]);
            r.duration_s = std::stod(fields[3]);
            r.watched_s = std::stod(fields[4]);
        } catch (const std::exception&) {
            throw ParseError("trace line " + std::to_string(line_no) + ": bad number");
        }
        if (r.watched_s < 0.0 || r.watched_s > r.duration_s || r.duration_s <= 0.0)
            throw InvalidRecord("trace line " + std::to_string(line_no) +
                                ": watched_s outside [0, duration_s]");
        r.completed = r.watched_s == r.duration_s;
        records.push_back(r);
    }
    return records;
}

}  // namespace twinstream
