#include "twinstream/predictor.hpp"

#include <algorithm>
#include <cmath>

namespace twinstream {

const Representation& BitrateLadder::at(int index) const {
    if (index < 0 || index >= static_cast<int>(reps.size()))
        throw UnknownRepresentation("representation index " + std::to_string(index) +
                                    " outside ladder of " + std::to_string(reps.size()));
    return reps[static_cast<std::size_t>(index)];
}

double spectral_efficiency(double snr_db) {
    return std::log2(1.0 + std::pow(10.0, snr_db / 10.0));
}

double group_efficiency(const std::vector<double>& member_snr_db) {
    if (member_snr_db.empty()) throw EmptyGroup("group efficiency needs members");
    return spectral_efficiency(*std::min_element(member_snr_db.begin(), member_snr_db.end()));
}

int select_representation(const BitrateLadder& ladder, double eta, double budget_hz) {
    if (ladder.reps.empty()) throw UnknownRepresentation("empty bitrate ladder");
    const double capacity_bps = eta * budget_hz;
    int pick = 0;  // floor rule: the lowest representation when nothing fits
    for (int i = 0; i < static_cast<int>(ladder.reps.size()); ++i)
        if (ladder.reps[static_cast<std::size_t>(i)].bitrate_bps <= capacity_bps) pick = i;
    return pick;
}

const Video& catalog_video(const Catalog& catalog, int video_id) {
    for (const Video& v : catalog)
        if (v.id == video_id) return v;
    throw Error("video " + std::to_string(video_id) + " not in catalog");
}

IntervalPlaylist build_playlist_for_interval(const Playlist& source, const SwipeCdf& cdf,
                                             const Catalog& catalog, double interval_s) {
    if (source.items.empty()) throw EmptyPlaylist("recommendation source is empty");

    IntervalPlaylist out;
    double covered = 0.0;
    for (const PlaylistEntry& entry : source.items) {
        if (covered >= interval_s) return out;
        const Video& video = catalog_video(catalog, entry.video_id);
        const double engagement = expected_engagement(cdf, video.category, video.duration_s);
        // The final video only plays until the interval boundary.
        const double expected = std::min(engagement, interval_s - covered);
        out.video_ids.push_back(video.id);
        out.expected_play_s.push_back(expected);
        covered += expected;
    }
    out.undersupplied = covered < interval_s;
    return out;
}

double predict_radio(const IntervalPlaylist& playlist, double bitrate_bps, double eta,
                     double interval_s) {
    double expected_bits = 0.0;
    for (double play_s : playlist.expected_play_s) expected_bits += bitrate_bps * play_s;
    return expected_bits / (interval_s * eta);
}

double predict_compute(const IntervalPlaylist& playlist, const Catalog& catalog,
                       const BitrateLadder& ladder, int representation, double kappa,
                       double segment_s, double interval_s) {
    const Representation& rep = ladder.at(representation);
    if (representation == ladder.highest()) return 0.0;  // stored natively

    double cycles = 0.0;
    for (std::size_t i = 0; i < playlist.video_ids.size(); ++i) {
        const Video& video = catalog_video(catalog, playlist.video_ids[i]);
        const double expected = playlist.expected_play_s[i];
        const double segments = std::ceil(expected / segment_s) * segment_s;
        const double transcoded_s = std::min(segments, video.duration_s);
        cycles += kappa * rep.bitrate_bps * transcoded_s;
    }
    return cycles / interval_s;
}

double accuracy(double predicted, double actual) {
    if (actual <= 0.0) return predicted == 0.0 ? 1.0 : 0.0;
    return std::max(0.0, 1.0 - std::abs(predicted - actual) / actual);
}

}  // namespace twinstream
