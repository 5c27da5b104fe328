#pragma once

#include <string>
#include <vector>

#include "twinstream/abstraction.hpp"
#include "twinstream/errors.hpp"

namespace twinstream {

struct Representation {
    std::string label;
    double bitrate_bps = 0.0;
};

/// Ordered encodings of a video, strictly increasing bitrate; the highest is
/// what the edge server stores natively.
struct BitrateLadder {
    std::vector<Representation> reps;

    int highest() const { return static_cast<int>(reps.size()) - 1; }
    const Representation& at(int index) const;
};

/// Radio bandwidth and transcoding compute demand for one group over one
/// reservation interval.
struct ResourceDemand {
    double radio_hz = 0.0;
    double compute_cps = 0.0;
    int group_id = -1;
    int interval_index = -1;
};

/// Shannon spectral efficiency log2(1 + 10^(snr_db/10)) in bit/s/Hz.
double spectral_efficiency(double snr_db);

/// Multicast efficiency is limited by the worst member:
/// spectral_efficiency(min member SNR). Throws EmptyGroup.
double group_efficiency(const std::vector<double>& member_snr_db);

/// Highest representation whose bitrate fits eta*budget_hz; the lowest when
/// none fits. Returns the ladder index.
int select_representation(const BitrateLadder& ladder, double eta, double budget_hz);

/// A recommendation prefix sized to cover one interval, with the expected
/// playback seconds of each video (the last entry is capped at the interval
/// boundary). `undersupplied` marks a source that ran out first.
struct IntervalPlaylist {
    std::vector<int> video_ids;
    std::vector<double> expected_play_s;
    bool undersupplied = false;
};

/// Walk the ranking accumulating expected engagement from the group CDF until
/// the interval is covered or the source is exhausted. Throws EmptyPlaylist.
IntervalPlaylist build_playlist_for_interval(const Playlist& source, const SwipeCdf& cdf,
                                             const Catalog& catalog, double interval_s);

/// Radio demand: expected bits / (interval * eta).
double predict_radio(const IntervalPlaylist& playlist, double bitrate_bps, double eta,
                     double interval_s);

/// Transcoding demand: zero when serving the stored highest representation,
/// otherwise kappa * bitrate * expected transcoded seconds (whole segments
/// ahead of the expected playhead, capped at the video duration) per interval
/// second. Throws UnknownRepresentation.
double predict_compute(const IntervalPlaylist& playlist, const Catalog& catalog,
                       const BitrateLadder& ladder, int representation, double kappa,
                       double segment_s, double interval_s);

/// Clamped relative accuracy max(0, 1 - |predicted - actual| / actual); a zero
/// actual scores 1 when the prediction is also zero, else 0.
double accuracy(double predicted, double actual);

/// Lookup helper: the catalog video with the given id (throws on miss).
const Video& catalog_video(const Catalog& catalog, int video_id);

}  // namespace twinstream
