#include "twinstream/udt.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace twinstream {

int track_index(AttributeKind kind, int n_categories) {
    switch (kind.attr) {
        case Attribute::ChannelSnr: return 0;
        case Attribute::LocationX: return 1;
        case Attribute::LocationY: return 2;
        case Attribute::WatchFraction:
            if (kind.category < 0 || kind.category >= n_categories)
                throw UnknownAttribute("watch fraction category " +
                                       std::to_string(kind.category) + " out of range");
            return 3 + kind.category;
        case Attribute::Preference:
            if (kind.category < 0 || kind.category >= n_categories)
                throw UnknownAttribute("preference category " +
                                       std::to_string(kind.category) + " out of range");
            return 3 + n_categories + kind.category;
    }
    throw UnknownAttribute("unrecognized attribute");
}

AttributeKind kind_of_track(int index, int n_categories) {
    if (index == 0) return AttributeKind::channel_snr();
    if (index == 1) return AttributeKind::location_x();
    if (index == 2) return AttributeKind::location_y();
    if (index >= 3 && index < 3 + n_categories)
        return AttributeKind::watch_fraction(index - 3);
    if (index >= 3 + n_categories && index < 3 + 2 * n_categories)
        return AttributeKind::preference(index - 3 - n_categories);
    throw UnknownAttribute("track index " + std::to_string(index) + " out of range");
}

std::string attribute_name(AttributeKind kind) {
    switch (kind.attr) {
        case Attribute::ChannelSnr: return "ChannelSnr";
        case Attribute::LocationX: return "LocationX";
        case Attribute::LocationY: return "LocationY";
        case Attribute::WatchFraction:
            return "WatchFraction[" + std::to_string(kind.category) + "]";
        case Attribute::Preference:
            return "Preference[" + std::to_string(kind.category) + "]";
    }
    return "?";
}

UserDigitalTwin::UserDigitalTwin(int user_id, int n_categories,
                                 CollectionSchedule schedule, std::size_t capacity)
    : user_id_(user_id),
      n_categories_(n_categories),
      capacity_(capacity),
      schedule_(schedule),
      tracks_(track_count(n_categories)) {
    if (capacity_ == 0) throw Error("twin capacity must be positive");
}

const std::deque<Sample>& UserDigitalTwin::track(AttributeKind kind) const {
    return tracks_[static_cast<std::size_t>(track_index(kind, n_categories_))];
}

void UserDigitalTwin::ingest(AttributeKind kind, Sample sample) {
    auto& track = tracks_[static_cast<std::size_t>(track_index(kind, n_categories_))];
    if (!track.empty() && sample.t <= track.back().t)
        throw NonMonotonicTimestamp(attribute_name(kind) + ": t=" +
                                    std::to_string(sample.t) + " not after t=" +
                                    std::to_string(track.back().t));
    track.push_back(sample);
    if (track.size() > capacity_) track.pop_front();
}

std::vector<double> UserDigitalTwin::window(AttributeKind kind, double t_end,
                                            double horizon, int n_points) const {
    if (n_points < 2) throw Error("window requires n_points >= 2");
    if (horizon <= 0.0) throw Error("window requires horizon > 0");
    const auto& track = tracks_[static_cast<std::size_t>(track_index(kind, n_categories_))];
    if (track.empty()) throw EmptyTrack(attribute_name(kind) + ": empty track");

    std::vector<double> out(static_cast<std::size_t>(n_points));
    const double step = horizon / (n_points - 1);
    // Zero-order hold: value of the latest sample with timestamp <= grid time;
    // grid times before the first sample backfill with the first value.
    std::size_t cursor = 0;
    for (int i = 0; i < n_points; ++i) {
        const double tg = t_end - horizon + i * step;
        if (track[0].t > tg) {
            out[static_cast<std::size_t>(i)] = track[0].value;
            continue;
        }
        while (cursor + 1 < track.size() && track[cursor + 1].t <= tg) ++cursor;
        out[static_cast<std::size_t>(i)] = track[cursor].value;
    }
    return out;
}

namespace {

double normalize_clamped(double v, double lo, double hi) {
    const double x = (v - lo) / (hi - lo);
    return std::clamp(x, 0.0, 1.0);
}

}  // namespace

Matrix UserDigitalTwin::status_matrix(double t_end, double horizon, int n_points,
                                      const NormalizationBounds& bounds) const {
    const int n_tracks = track_count(n_categories_);
    Matrix m(n_tracks, n_points);
    for (int r = 0; r < n_tracks; ++r) {
        const AttributeKind kind = kind_of_track(r, n_categories_);
        const std::vector<double> row = window(kind, t_end, horizon, n_points);
        double lo = 0.0, hi = 1.0;
        switch (kind.attr) {
            case Attribute::ChannelSnr: lo = bounds.snr_db_min; hi = bounds.snr_db_max; break;
            case Attribute::LocationX: lo = bounds.x_min; hi = bounds.x_max; break;
            case Attribute::LocationY: lo = bounds.y_min; hi = bounds.y_max; break;
            case Attribute::WatchFraction:
            case Attribute::Preference: break;  // already fractions
        }
        for (int c = 0; c < n_points; ++c)
            m.at(r, c) = normalize_clamped(row[static_cast<std::size_t>(c)], lo, hi);
    }
    return m;
}

UserDigitalTwin& UdtStore::add_twin(int user_id, CollectionSchedule schedule,
                                    std::size_t capacity) {
    auto [it, inserted] = twins_.emplace(
        user_id, UserDigitalTwin(user_id, n_categories_, schedule, capacity));
    if (!inserted) throw Error("twin " + std::to_string(user_id) + " already exists");
    return it->second;
}

UserDigitalTwin& UdtStore::twin(int user_id) {
    auto it = twins_.find(user_id);
    if (it == twins_.end()) throw Error("no twin for user " + std::to_string(user_id));
    return it->second;
}

const UserDigitalTwin& UdtStore::twin(int user_id) const {
    auto it = twins_.find(user_id);
    if (it == twins_.end()) throw Error("no twin for user " + std::to_string(user_id));
    return it->second;
}

namespace {

void print_real(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

}  // namespace

void UdtStore::snapshot(const std::string& path) const {
    std::string body;
    body += "UDTSTORE v1 " + std::to_string(twins_.size()) + " " +
            std::to_string(n_categories_) + "\n";
    for (const auto& [id, twin] : twins_) {
        body += "user " + std::to_string(id) + " " + std::to_string(twin.capacity());
        for (double p : {twin.schedule().snr_period_s, twin.schedule().location_period_s,
                         twin.schedule().watch_period_s, twin.schedule().preference_period_s}) {
            body += " ";
            print_real(body, p);
        }
        body += "\n";
        const int n_tracks = track_count(twin.n_categories());
        for (int r = 0; r < n_tracks; ++r) {
            const auto& track = twin.track_at(r);
            body += "track " + std::to_string(r) + " " + std::to_string(track.size()) + "\n";
            for (const Sample& s : track) {
                print_real(body, s.t);
                body += " ";
                print_real(body, s.value);
                body += "\n";
            }
        }
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoFailure("cannot open " + path + " for writing");
    f << body;
    if (!f) throw IoFailure("write to " + path + " failed");
}

UdtStore UdtStore::restore(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoFailure("cannot open " + path + " for reading");

    std::string magic, version;
    std::size_t n_users = 0;
    int n_categories = 0;
    if (!(f >> magic >> version >> n_users >> n_categories) || magic != "UDTSTORE" ||
        version != "v1")
        throw FormatVersionMismatch("expected 'UDTSTORE v1' header in " + path);

    UdtStore store(n_categories);
    for (std::size_t u = 0; u < n_users; ++u) {
        std::string tag;
        int user_id = 0;
        std::size_t capacity = 0;
        CollectionSchedule sched;
        if (!(f >> tag >> user_id >> capacity >> sched.snr_period_s >>
              sched.location_period_s >> sched.watch_period_s >> sched.preference_period_s) ||
            tag != "user")
            throw FormatVersionMismatch("malformed user record in " + path);
        UserDigitalTwin& twin = store.add_twin(user_id, sched, capacity);
        const int n_tracks = track_count(n_categories);
        for (int r = 0; r < n_tracks; ++r) {
            int index = 0;
            std::size_t n_samples = 0;
            if (!(f >> tag >> index >> n_samples) || tag != "track" || index != r)
                throw FormatVersionMismatch("malformed track record in " + path);
            for (std::size_t s = 0; s < n_samples; ++s) {
                Sample sample;
                if (!(f >> sample.t >> sample.value))
                    throw FormatVersionMismatch("truncated samples in " + path);
                twin.ingest(kind_of_track(r, n_categories), sample);
            }
        }
    }
    return store;
}

}  // namespace twinstream
