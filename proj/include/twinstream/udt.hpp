#pragma once

#include <deque>
#include <map>
#include <string>
#include <vector>

#include "twinstream/errors.hpp"
#include "twinstream/matrix.hpp"

namespace twinstream {

/// One timestamped telemetry value. Timestamps are simulation seconds and
/// strictly increase within a track.
struct Sample {
    double t = 0.0;
    double value = 0.0;

    bool operator==(const Sample&) const = default;
};

enum class Attribute { ChannelSnr, LocationX, LocationY, WatchFraction, Preference };

/// Attribute identifier; `category` is only meaningful for the per-category
/// WatchFraction and Preference tracks.
struct AttributeKind {
    Attribute attr = Attribute::ChannelSnr;
    int category = 0;

    static AttributeKind channel_snr() { return {Attribute::ChannelSnr, 0}; }
    static AttributeKind location_x() { return {Attribute::LocationX, 0}; }
    static AttributeKind location_y() { return {Attribute::LocationY, 0}; }
    static AttributeKind watch_fraction(int c) { return {Attribute::WatchFraction, c}; }
    static AttributeKind preference(int c) { return {Attribute::Preference, c}; }

    bool operator==(const AttributeKind&) const = default;
};

/// Tracks per twin: ChannelSnr, LocationX, LocationY, then one WatchFraction
/// and one Preference track per category.
inline int track_count(int n_categories) { return 3 + 2 * n_categories; }

/// Canonical flat track index for an attribute. Throws UnknownAttribute when
/// the category is out of range for the twin's category count.
int track_index(AttributeKind kind, int n_categories);
AttributeKind kind_of_track(int index, int n_categories);
std::string attribute_name(AttributeKind kind);

/// Collection periods in seconds, one per attribute family. Invariant:
/// snr_period <= location_period <= watch/preference periods.
struct CollectionSchedule {
    double snr_period_s = 1.0;
    double location_period_s = 5.0;
    double watch_period_s = 300.0;
    double preference_period_s = 300.0;

    bool operator==(const CollectionSchedule&) const = default;
};

/// Normalization bounds used by status_matrix; fractions and preferences are
/// always normalized over [0, 1].
struct NormalizationBounds {
    double snr_db_min = 0.0;
    double snr_db_max = 80.0;
    double x_min = 0.0;
    double x_max = 2000.0;
    double y_min = 0.0;
    double y_max = 2000.0;
};

/// Per-user digital twin: one bounded time-series track per attribute.
/// Oldest samples are evicted once a track reaches capacity.
class UserDigitalTwin {
public:
    UserDigitalTwin(int user_id, int n_categories, CollectionSchedule schedule,
                    std::size_t capacity = 256);

    int user_id() const { return user_id_; }
    int n_categories() const { return n_categories_; }
    std::size_t capacity() const { return capacity_; }
    const CollectionSchedule& schedule() const { return schedule_; }

    const std::deque<Sample>& track(AttributeKind kind) const;
    const std::deque<Sample>& track_at(int index) const { return tracks_[index]; }

    /// Append a sample. Throws NonMonotonicTimestamp if the timestamp does not
    /// strictly increase, UnknownAttribute for a bad kind; state is unchanged
    /// on error.
    void ingest(AttributeKind kind, Sample sample);

    /// Resample one track onto a uniform grid ending at t_end via zero-order
    /// hold. Grid points before the first sample take the first sample value.
    std::vector<double> window(AttributeKind kind, double t_end, double horizon,
                               int n_points) const;

    /// All tracks resampled onto a common grid, rows in canonical order,
    /// min-max normalized to [0, 1] (out-of-bound values clamp).
    Matrix status_matrix(double t_end, double horizon, int n_points,
                         const NormalizationBounds& bounds) const;

    bool operator==(const UserDigitalTwin&) const = default;

private:
    int user_id_;
    int n_categories_;
    std::size_t capacity_;
    CollectionSchedule schedule_;
    std::vector<std::deque<Sample>> tracks_;
};

/// Collection of twins keyed by user id. Twins are independent: concurrent
/// ingestion into distinct twins is safe, per-twin access is exclusive.
class UdtStore {
public:
    UdtStore() = default;
    explicit UdtStore(int n_categories) : n_categories_(n_categories) {}

    int n_categories() const { return n_categories_; }
    std::size_t size() const { return twins_.size(); }
    bool contains(int user_id) const { return twins_.count(user_id) > 0; }

    UserDigitalTwin& add_twin(int user_id, CollectionSchedule schedule,
                              std::size_t capacity = 256);
    UserDigitalTwin& twin(int user_id);
    const UserDigitalTwin& twin(int user_id) const;
    const std::map<int, UserDigitalTwin>& twins() const { return twins_; }

    /// Write all twins to a versioned text snapshot (17 significant digits,
    /// bit-exact round trip). Throws IoFailure.
    void snapshot(const std::string& path) const;

    /// Read a snapshot written by `snapshot`. Throws IoFailure on unreadable
    /// files and FormatVersionMismatch on a bad header.
    static UdtStore restore(const std::string& path);

    bool operator==(const UdtStore&) const = default;

private:
    int n_categories_ = 0;
    std::map<int, UserDigitalTwin> twins_;
};

}  // namespace twinstream
