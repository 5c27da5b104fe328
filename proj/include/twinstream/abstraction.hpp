#pragma once

#include <vector>

#include "twinstream/errors.hpp"
#include "twinstream/matrix.hpp"

namespace twinstream {

/// One watch outcome: w seconds watched of a D-second video.
/// Invariants: 0 <= w <= D; completed exactly when w == D.
struct WatchRecord {
    int user_id = -1;
    int video_id = -1;
    int category = 0;
    double duration_s = 0.0;
    double watched_s = 0.0;
    bool completed = false;
};

/// Per-category cumulative swiping probability over normalized watch
/// fraction: f.at(c, b) = P(swipe at or before fraction b/B). Completed
/// watches are right-censored and contribute to no bin, so 1 - F(1) is the
/// completion mass. A fresh category (count 0) is the never-swipe prior F=0.
struct SwipeCdf {
    int bins = 20;  // B; grid has B+1 points 0, 1/B, ..., 1
    Matrix f;       // categories x (B+1)
    std::vector<long long> count;  // observed records per category

    SwipeCdf() = default;
    SwipeCdf(int categories, int bins_);

    int categories() const { return f.rows; }
};

/// Fold one interval's records into the CDF: per category an empirical CDF
/// over watch fractions is blended as F <- decay*F_prior + (1-decay)*F_new.
/// A category with no new records keeps its prior; a category with no prior
/// observations adopts F_new directly. Throws InvalidRecord when w < 0 or
/// w > D.
SwipeCdf update_swipe_cdf(const std::vector<WatchRecord>& records, const SwipeCdf& prior,
                          double decay);

/// Expected engagement seconds for a D-second video of the given category:
/// left-Riemann survival sum D * sum_b (1 - F(b/B)) / B. Always in [0, D].
double expected_engagement(const SwipeCdf& cdf, int category, double duration_s);

/// Per-category simplex weights (sum 1, each in [0, 1]).
using PreferenceVector = std::vector<double>;

/// EWMA preference update toward the record's realized watch fraction:
/// p_c <- (1-beta)*p_c + beta*(w/D) for the record's category, other entries
/// scaled by (1-beta), then renormalized to a simplex.
PreferenceVector update_preference(const PreferenceVector& pref, const WatchRecord& record,
                                   double beta);

/// Arithmetic mean of member preferences, renormalized.
PreferenceVector group_preference(const std::vector<PreferenceVector>& members);

struct Video {
    int id = -1;
    int category = 0;
    double duration_s = 0.0;
    double popularity = 0.0;
};

using Catalog = std::vector<Video>;

struct PlaylistEntry {
    int video_id = -1;
    double score = 0.0;
};

/// Ranked recommendation for one group and one interval.
struct Playlist {
    std::vector<PlaylistEntry> items;
};

/// score(v) = alpha * pop_norm(v) + (1-alpha) * group_pref[cat(v)], with
/// popularity min-max normalized over the catalog (all-equal popularity
/// normalizes to 1). Top-N by score, ties toward the lower video id.
Playlist recommend(const PreferenceVector& group_pref, const Catalog& catalog,
                   double alpha, int n);

}  // namespace twinstream
