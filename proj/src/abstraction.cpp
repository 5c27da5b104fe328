#include "twinstream/abstraction.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace twinstream {

SwipeCdf::SwipeCdf(int categories, int bins_)
    : bins(bins_), f(categories, bins_ + 1), count(static_cast<std::size_t>(categories), 0) {}

SwipeCdf update_swipe_cdf(const std::vector<WatchRecord>& records, const SwipeCdf& prior,
                          double decay) {
    if (decay < 0.0 || decay >= 1.0) throw Error("decay must lie in [0, 1)");
    const int n_cat = prior.categories();
    const int bins = prior.bins;

    std::vector<int> totals(static_cast<std::size_t>(n_cat), 0);
    Matrix swipe_counts(n_cat, bins + 1);
    for (const WatchRecord& r : records) {
        if (r.watched_s < 0.0 || r.watched_s > r.duration_s || r.duration_s <= 0.0)
            throw InvalidRecord("watch record for video " + std::to_string(r.video_id) +
                                " violates 0 <= w <= D");
        if (r.category < 0 || r.category >= n_cat)
            throw InvalidRecord("watch record category " + std::to_string(r.category) +
                                " out of range");
        ++totals[static_cast<std::size_t>(r.category)];
        if (r.completed) continue;  // right-censored: contributes to no bin
        const double fraction = r.watched_s / r.duration_s;
        for (int b = 0; b <= bins; ++b) {
            const double x = static_cast<double>(b) / bins;
            if (fraction <= x) swipe_counts.at(r.category, b) += 1.0;
        }
    }

    SwipeCdf out = prior;
    for (int c = 0; c < n_cat; ++c) {
        const int n_new = totals[static_cast<std::size_t>(c)];
        if (n_new == 0) continue;  // no new evidence: keep prior
        const bool cold = prior.count[static_cast<std::size_t>(c)] == 0;
        const double keep = cold ? 0.0 : decay;  // a fresh category adopts F_new
        for (int b = 0; b <= bins; ++b) {
            const double f_new = swipe_counts.at(c, b) / n_new;
            out.f.at(c, b) = keep * prior.f.at(c, b) + (1.0 - keep) * f_new;
        }
        out.count[static_cast<std::size_t>(c)] += n_new;
    }
    return out;
}

double expected_engagement(const SwipeCdf& cdf, int category, double duration_s) {
    double survival = 0.0;
    for (int b = 0; b < cdf.bins; ++b)
        survival += 1.0 - cdf.f.at(category, b);
    return duration_s * survival / cdf.bins;
}

PreferenceVector update_preference(const PreferenceVector& pref, const WatchRecord& record,
                                   double beta) {
    PreferenceVector out = pref;
    const double fraction = record.duration_s > 0.0 ? record.watched_s / record.duration_s : 0.0;
    for (double& p : out) p *= 1.0 - beta;
    out[static_cast<std::size_t>(record.category)] += beta * fraction;
    double sum = 0.0;
    for (double p : out) sum += p;
    if (sum > 0.0)
        for (double& p : out) p /= sum;
    return out;
}

PreferenceVector group_preference(const std::vector<PreferenceVector>& members) {
    if (members.empty()) throw EmptyGroup("group preference needs members");
    PreferenceVector out(members.front().size(), 0.0);
    for (const PreferenceVector& p : members)
        for (std::size_t c = 0; c < out.size(); ++c) out[c] += p[c];
    double sum = 0.0;
    for (double p : out) sum += p;
    if (sum > 0.0)
        for (double& p : out) p /= sum;
    return out;
}

Playlist recommend(const PreferenceVector& group_pref, const Catalog& catalog,
                   double alpha, int n) {
    if (catalog.empty()) throw EmptyCatalog("cannot recommend from an empty catalog");
    if (n < 1) throw Error("playlist size must be >= 1");

    double pop_min = catalog.front().popularity;
    double pop_max = pop_min;
    for (const Video& v : catalog) {
        pop_min = std::min(pop_min, v.popularity);
        pop_max = std::max(pop_max, v.popularity);
    }
    const double span = pop_max - pop_min;

    Playlist out;
    out.items.reserve(catalog.size());
    for (const Video& v : catalog) {
        const double pop_norm = span > 0.0 ? (v.popularity - pop_min) / span : 1.0;
        const double pref = group_pref[static_cast<std::size_t>(v.category)];
        out.items.push_back({v.id, alpha * pop_norm + (1.0 - alpha) * pref});
    }
    std::sort(out.items.begin(), out.items.end(), [](const PlaylistEntry& a, const PlaylistEntry& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.video_id < b.video_id;
    });
    if (out.items.size() > static_cast<std::size_t>(n)) out.items.resize(static_cast<std::size_t>(n));
    return out;
}

}  // namespace twinstream
