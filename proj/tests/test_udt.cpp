#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "twinstream/rng.hpp"
#include "twinstream/udt.hpp"

#include "support.hpp"

using namespace twinstream;

namespace {

UserDigitalTwin make_twin(int categories = 2, std::size_t capacity = 256) {
    return UserDigitalTwin(7, categories, CollectionSchedule{}, capacity);
}

}  // namespace

TEST_CASE("track layout follows the canonical attribute order") {
    CHECK(track_count(2) == 7);
    CHECK(track_index(AttributeKind::channel_snr(), 2) == 0);
    CHECK(track_index(AttributeKind::location_x(), 2) == 1);
    CHECK(track_index(AttributeKind::location_y(), 2) == 2);
    CHECK(track_index(AttributeKind::watch_fraction(1), 2) == 4);
    CHECK(track_index(AttributeKind::preference(0), 2) == 5);
    CHECK_THROWS_AS(track_index(AttributeKind::watch_fraction(2), 2), UnknownAttribute);
    CHECK_THROWS_AS(track_index(AttributeKind::preference(-1), 2), UnknownAttribute);
    for (int r = 0; r < track_count(3); ++r)
        CHECK(track_index(kind_of_track(r, 3), 3) == r);
}

TEST_CASE("ingest appends to an empty track") {
    auto twin = make_twin();
    twin.ingest(AttributeKind::channel_snr(), {0.0, 3.0});
    CHECK(twin.track(AttributeKind::channel_snr()).size() == 1);
    CHECK(twin.track(AttributeKind::channel_snr()).front().value == 3.0);
}

TEST_CASE("ingest evicts exactly the oldest sample at capacity") {
    auto twin = make_twin(2, 2);
    twin.ingest(AttributeKind::channel_snr(), {0.0, 1.0});
    twin.ingest(AttributeKind::channel_snr(), {1.0, 2.0});
    twin.ingest(AttributeKind::channel_snr(), {2.0, 3.0});
    const auto& track = twin.track(AttributeKind::channel_snr());
    REQUIRE(track.size() == 2);
    CHECK(track[0] == Sample{1.0, 2.0});
    CHECK(track[1] == Sample{2.0, 3.0});
}

TEST_CASE("ingest rejects equal and backwards timestamps, state unchanged") {
    auto twin = make_twin();
    twin.ingest(AttributeKind::channel_snr(), {5.0, 1.0});
    CHECK_THROWS_AS(twin.ingest(AttributeKind::channel_snr(), {5.0, 9.0}),
                    NonMonotonicTimestamp);
    CHECK_THROWS_AS(twin.ingest(AttributeKind::channel_snr(), {4.0, 9.0}),
                    NonMonotonicTimestamp);
    REQUIRE(twin.track(AttributeKind::channel_snr()).size() == 1);
    CHECK(twin.track(AttributeKind::channel_snr()).back() == Sample{5.0, 1.0});
}

TEST_CASE("window holds the last sample value across the grid") {
    auto twin = make_twin();
    twin.ingest(AttributeKind::channel_snr(), {0.0, 1.0});
    twin.ingest(AttributeKind::channel_snr(), {10.0, 2.0});
    const auto w = twin.window(AttributeKind::channel_snr(), 10.0, 10.0, 3);
    CHECK(w == std::vector<double>{1.0, 1.0, 2.0});
}

TEST_CASE("window of a constant track is constant") {
    auto twin = make_twin();
    twin.ingest(AttributeKind::channel_snr(), {0.0, 7.0});
    const auto w = twin.window(AttributeKind::channel_snr(), 100.0, 40.0, 4);
    CHECK(w == std::vector<double>{7.0, 7.0, 7.0, 7.0});
}

TEST_CASE("window backfills grid points before the first sample") {
    auto twin = make_twin();
    twin.ingest(AttributeKind::channel_snr(), {2.0, 1.0});
    const auto w = twin.window(AttributeKind::channel_snr(), 2.0, 4.0, 3);
    CHECK(w == std::vector<double>{1.0, 1.0, 1.0});
}

TEST_CASE("window on an empty track throws") {
    auto twin = make_twin();
    CHECK_THROWS_AS(twin.window(AttributeKind::channel_snr(), 1.0, 1.0, 2), EmptyTrack);
}

TEST_CASE("window output length always matches and ZOH ignores redundant samples") {
    Rng rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        auto twin = make_twin(1);
        double t = 0.0;
        for (int i = 0; i < 20; ++i) {
            t += rng.uniform(0.1, 3.0);
            twin.ingest(AttributeKind::channel_snr(), {t, rng.uniform(-5.0, 5.0)});
        }
        const int n = 2 + static_cast<int>(rng.bounded(14));
        const double horizon = rng.uniform(1.0, 30.0);
        const auto w = twin.window(AttributeKind::channel_snr(), t, horizon, n);
        CHECK(static_cast<int>(w.size()) == n);

        // Inserting a redundant sample holding the same value changes nothing.
        auto copy = twin;
        const double held = w.back();
        copy.ingest(AttributeKind::channel_snr(), {t + 0.001, held});
        const auto w2 = copy.window(AttributeKind::channel_snr(), t, horizon, n);
        CHECK(w == w2);
    }
}

TEST_CASE("status matrix has canonical shape and min-max normalization") {
    auto twin = make_twin(2);
    NormalizationBounds bounds;
    bounds.snr_db_min = -5.0;
    bounds.snr_db_max = 25.0;
    bounds.x_min = 0.0;
    bounds.x_max = 100.0;
    bounds.y_min = 0.0;
    bounds.y_max = 100.0;

    twin.ingest(AttributeKind::channel_snr(), {0.0, 10.0});
    twin.ingest(AttributeKind::location_x(), {0.0, 0.0});
    twin.ingest(AttributeKind::location_y(), {0.0, 50.0});
    for (int c = 0; c < 2; ++c) {
        twin.ingest(AttributeKind::watch_fraction(c), {0.0, 0.5});
        twin.ingest(AttributeKind::preference(c), {0.0, 0.5});
    }

    const Matrix m = twin.status_matrix(10.0, 10.0, 4, bounds);
    CHECK(m.rows == 7);
    CHECK(m.cols == 4);
    CHECK(m.at(0, 0) == doctest::Approx(0.5));   // (10 - (-5)) / 30
    CHECK(m.at(1, 0) == 0.0);                    // lower bound maps to 0
    CHECK(m.at(2, 0) == doctest::Approx(0.5));
}

TEST_CASE("status matrix clamps out-of-bound values to the unit interval") {
    auto twin = make_twin(1);
    NormalizationBounds bounds;
    bounds.snr_db_min = 0.0;
    bounds.snr_db_max = 10.0;
    twin.ingest(AttributeKind::channel_snr(), {0.0, 50.0});
    twin.ingest(AttributeKind::location_x(), {0.0, -10.0});
    twin.ingest(AttributeKind::location_y(), {0.0, 1.0});
    twin.ingest(AttributeKind::watch_fraction(0), {0.0, 1.0});
    twin.ingest(AttributeKind::preference(0), {0.0, 1.0});
    const Matrix m = twin.status_matrix(1.0, 1.0, 2, bounds);
    CHECK(m.at(0, 0) == 1.0);
    CHECK(m.at(1, 0) == 0.0);
    for (double v : m.data) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("status matrix names the empty attribute") {
    auto twin = make_twin(1);
    twin.ingest(AttributeKind::channel_snr(), {0.0, 1.0});
    try {
        twin.status_matrix(1.0, 1.0, 2, NormalizationBounds{});
        FAIL("expected EmptyTrack");
    } catch (const EmptyTrack& e) {
        CHECK(std::string(e.what()).find("LocationX") != std::string::npos);
    }
}

TEST_CASE("snapshot round-trips an empty store") {
    test_support::TempDir dir("udt_empty");
    UdtStore store(3);
    store.snapshot(dir.file("s.txt"));
    CHECK(UdtStore::restore(dir.file("s.txt")) == store);
}

TEST_CASE("snapshot round-trips a populated store bit-exactly") {
    test_support::TempDir dir("udt_full");
    UdtStore store(2);
    Rng rng(1234);
    for (int u = 0; u < 3; ++u) {
        auto& twin = store.add_twin(u, CollectionSchedule{}, 64);
        double t = 0.0;
        for (int i = 0; i < 10; ++i) {
            t += rng.uniform(0.0, 1.0) + 1e-6;
            for (int r = 0; r < track_count(2); ++r)
                twin.ingest(kind_of_track(r, 2), {t, rng.uniform(-1e3, 1e3) / 3.0});
        }
    }
    store.snapshot(dir.file("s.txt"));
    const UdtStore restored = UdtStore::restore(dir.file("s.txt"));
    CHECK(restored == store);

    // Involution: a second snapshot produces identical bytes.
    restored.snapshot(dir.file("s2.txt"));
    CHECK(test_support::slurp(dir.file("s.txt")) == test_support::slurp(dir.file("s2.txt")));
}

TEST_CASE("restore rejects a wrong magic header") {
    test_support::TempDir dir("udt_magic");
    {
        FILE* f = std::fopen(dir.file("bad.txt").c_str(), "w");
        std::fputs("NOTUDT v9 0 0\n", f);
        std::fclose(f);
    }
    CHECK_THROWS_AS(UdtStore::restore(dir.file("bad.txt")), FormatVersionMismatch);
    CHECK_THROWS_AS(UdtStore::restore(dir.file("missing.txt")), IoFailure);
}
