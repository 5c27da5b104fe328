#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <set>

#include "twinstream/grouping.hpp"

#include "support.hpp"

using namespace twinstream;

namespace {

Matrix points(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(static_cast<int>(rows.size()), static_cast<int>(rows.begin()->size()));
    int r = 0;
    for (const auto& row : rows) {
        int c = 0;
        for (double v : row) m.at(r, c++) = v;
        ++r;
    }
    return m;
}

// Exhaustive optimal K-partition WCSS: assign each point to one of k groups,
// skip assignments with empty groups, centroids are member means.
double brute_force_wcss(const Matrix& features, int k) {
    const int n = features.rows;
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> assign(static_cast<std::size_t>(n), 0);
    const long long total = static_cast<long long>(std::pow(k, n));
    for (long long code = 0; code < total; ++code) {
        long long c = code;
        std::set<int> used;
        for (int i = 0; i < n; ++i) {
            assign[static_cast<std::size_t>(i)] = static_cast<int>(c % k);
            used.insert(assign[static_cast<std::size_t>(i)]);
            c /= k;
        }
        if (static_cast<int>(used.size()) != k) continue;

        Matrix centroids(k, features.cols);
        std::vector<int> counts(static_cast<std::size_t>(k), 0);
        for (int i = 0; i < n; ++i) {
            ++counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])];
            for (int d = 0; d < features.cols; ++d)
                centroids.at(assign[static_cast<std::size_t>(i)], d) += features.at(i, d);
        }
        for (int g = 0; g < k; ++g)
            for (int d = 0; d < features.cols; ++d)
                centroids.at(g, d) /= counts[static_cast<std::size_t>(g)];

        double wcss = 0.0;
        for (int i = 0; i < n; ++i)
            for (int d = 0; d < features.cols; ++d) {
                const double diff =
                    features.at(i, d) - centroids.at(assign[static_cast<std::size_t>(i)], d);
                wcss += diff * diff;
            }
        best = std::min(best, wcss);
    }
    return best;
}

void check_partition(const GroupAssignment& groups, int n) {
    REQUIRE(static_cast<int>(groups.labels.size()) == n);
    std::vector<int> counts(static_cast<std::size_t>(groups.k), 0);
    for (int label : groups.labels) {
        REQUIRE(label >= 0);
        REQUIRE(label < groups.k);
        ++counts[static_cast<std::size_t>(label)];
    }
    for (int count : counts) CHECK(count > 0);  // no empty groups
}

}  // namespace

TEST_CASE("pairwise stats of a single 3-4-5 pair") {
    const auto [mean, stddev] = pairwise_stats(points({{0, 0}, {3, 4}}));
    CHECK(mean == doctest::Approx(5.0));
    CHECK(stddev == doctest::Approx(0.0));
}

TEST_CASE("pairwise stats of identical vectors are zero") {
    const auto [mean, stddev] = pairwise_stats(points({{1, 2}, {1, 2}, {1, 2}}));
    CHECK(mean == 0.0);
    CHECK(stddev == 0.0);
}

TEST_CASE("pairwise stats enumerate unordered pairs with population std") {
    const auto [mean, stddev] = pairwise_stats(points({{0}, {1}, {2}}));
    CHECK(mean == doctest::Approx(4.0 / 3.0));
    CHECK(stddev == doctest::Approx(std::sqrt(2.0) / 3.0));
    CHECK_THROWS_AS(pairwise_stats(points({{0}})), TooFewUsers);
}

TEST_CASE("seeding with k equal to n yields a permutation of the points") {
    const Matrix pts = points({{0, 0}, {5, 0}, {0, 5}});
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        const Matrix centroids = kmeanspp_seed(pts, 3, rng);
        std::set<std::pair<double, double>> got;
        for (int g = 0; g < 3; ++g) got.insert({centroids.at(g, 0), centroids.at(g, 1)});
        CHECK(got == std::set<std::pair<double, double>>{{0, 0}, {5, 0}, {0, 5}});
    }
}

TEST_CASE("seeding falls back over duplicate points") {
    const Matrix pts = points({{2, 2}, {2, 2}, {2, 2}});
    Rng rng(5);
    const Matrix centroids = kmeanspp_seed(pts, 2, rng);
    CHECK(centroids.at(0, 0) == 2.0);
    CHECK(centroids.at(1, 0) == 2.0);
}

TEST_CASE("seeding bounds k") {
    const Matrix pts = points({{0}, {1}});
    Rng rng(1);
    const Matrix one = kmeanspp_seed(pts, 1, rng);
    CHECK((one.at(0, 0) == 0.0 || one.at(0, 0) == 1.0));
    CHECK_THROWS_AS(kmeanspp_seed(pts, 0, rng), BadK);
    CHECK_THROWS_AS(kmeanspp_seed(pts, 3, rng), BadK);
}

TEST_CASE("seeding follows the D^2 law on an outlier fixture") {
    // Points {0, 1, 100}: P(outlier second) = (10000/10001 + 9801/9802)/3.
    const Matrix pts = points({{0}, {1}, {100}});
    const double expected = (10000.0 / 10001.0 + 9801.0 / 9802.0) / 3.0;
    Rng rng(2024);
    int hits = 0;
    const int trials = 20000;
    for (int t = 0; t < trials; ++t) {
        const Matrix centroids = kmeanspp_seed(pts, 2, rng);
        if (centroids.at(1, 0) == 100.0) ++hits;
    }
    const double freq = static_cast<double>(hits) / trials;
    CHECK(freq == doctest::Approx(expected).epsilon(0.02));
}

TEST_CASE("lloyd finds the two obvious strips") {
    const Matrix pts = points({{0, 0}, {0, 1}, {10, 0}, {10, 1}});
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed);
        const GroupAssignment groups = construct_groups(pts, 2, rng);
        CHECK(groups.wcss == doctest::Approx(1.0));
        CHECK(groups.labels[0] == groups.labels[1]);
        CHECK(groups.labels[2] == groups.labels[3]);
        CHECK(groups.labels[0] != groups.labels[2]);
        check_partition(groups, 4);
    }
    CHECK(brute_force_wcss(pts, 2) == doctest::Approx(1.0));
}

TEST_CASE("k=1 reduces to the global mean and total sum of squares") {
    const Matrix pts = points({{0, 0}, {2, 0}, {0, 2}, {2, 2}});
    Rng rng(3);
    const GroupAssignment groups = construct_groups(pts, 1, rng);
    CHECK(groups.centroids.at(0, 0) == doctest::Approx(1.0));
    CHECK(groups.centroids.at(0, 1) == doctest::Approx(1.0));
    CHECK(groups.wcss == doctest::Approx(total_sum_squares(pts)));
}

TEST_CASE("k distinct locations reach zero WCSS") {
    const Matrix pts = points({{0, 0}, {0, 0}, {9, 9}, {9, 9}, {-5, 5}});
    Rng rng(4);
    const GroupAssignment groups = construct_groups(pts, 3, rng);
    CHECK(groups.wcss == doctest::Approx(0.0));
    check_partition(groups, 5);
}

TEST_CASE("centroids equal member means") {
    Rng data_rng(77);
    Matrix pts(9, 2);
    for (double& v : pts.data) v = data_rng.uniform(-4.0, 4.0);
    Rng rng(5);
    const GroupAssignment groups = construct_groups(pts, 3, rng);
    check_partition(groups, 9);
    Matrix mean(groups.k, 2);
    std::vector<int> counts(static_cast<std::size_t>(groups.k), 0);
    for (int i = 0; i < 9; ++i) {
        ++counts[static_cast<std::size_t>(groups.labels[static_cast<std::size_t>(i)])];
        for (int d = 0; d < 2; ++d)
            mean.at(groups.labels[static_cast<std::size_t>(i)], d) += pts.at(i, d);
    }
    for (int g = 0; g < groups.k; ++g)
        for (int d = 0; d < 2; ++d)
            CHECK(groups.centroids.at(g, d) ==
                  doctest::Approx(mean.at(g, d) / counts[static_cast<std::size_t>(g)]).epsilon(1e-9));
}

TEST_CASE("lloyd WCSS is non-increasing across 100 random fixtures") {
    Rng data_rng(123);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 3 + static_cast<int>(data_rng.bounded(8));
        const int k = 1 + static_cast<int>(data_rng.bounded(
            static_cast<std::uint64_t>(std::min(n, 4))));
        Matrix pts(n, 2);
        for (double& v : pts.data) v = data_rng.uniform(-5.0, 5.0);

        Rng seed_rng(static_cast<std::uint64_t>(trial) + 1000);
        std::vector<double> trace;
        const GroupAssignment groups =
            lloyd(pts, kmeanspp_seed(pts, k, seed_rng), 1e-12, 50, &trace);
        REQUIRE(!trace.empty());
        for (std::size_t i = 1; i < trace.size(); ++i)
            CHECK(trace[i] <= trace[i - 1] + 1e-12);
        check_partition(groups, n);
    }
}

TEST_CASE("best-of-10 seeding matches brute force on small fixtures") {
    Rng data_rng(321);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 4 + static_cast<int>(data_rng.bounded(4));  // 4..7
        const int k = 2 + static_cast<int>(data_rng.bounded(2));  // 2..3
        Matrix pts(n, 2);
        for (double& v : pts.data) v = data_rng.uniform(-3.0, 3.0);

        Rng rng(static_cast<std::uint64_t>(trial) * 31 + 7);
        const GroupAssignment groups = construct_groups_best_of(pts, k, 10, rng);
        const double optimal = brute_force_wcss(pts, k);
        CHECK(groups.wcss == doctest::Approx(optimal).epsilon(1e-9));
    }
}

TEST_CASE("construct_groups on a single user") {
    Rng rng(6);
    const GroupAssignment groups = construct_groups(points({{3, 4}}), 1, rng);
    CHECK(groups.k == 1);
    CHECK(groups.wcss == 0.0);
    CHECK(groups.labels == std::vector<int>{0});
}

TEST_CASE("construct_groups is deterministic given the seed") {
    Rng data_rng(9);
    Matrix pts(12, 3);
    for (double& v : pts.data) v = data_rng.uniform(0.0, 1.0);
    Rng a(42), b(42);
    const GroupAssignment ga = construct_groups(pts, 4, a);
    const GroupAssignment gb = construct_groups(pts, 4, b);
    CHECK(ga.labels == gb.labels);
    CHECK(ga.wcss == gb.wcss);
}

TEST_CASE("cluster reward plugs in compactness and grouping penalty") {
    const Matrix pts = points({{0, 0}, {0, 0}, {8, 8}, {8, 8}});
    Rng rng(7);
    const GroupAssignment perfect = construct_groups(pts, 2, rng);
    REQUIRE(perfect.wcss == doctest::Approx(0.0));
    CHECK(cluster_reward(pts, perfect, 0.1, 8) == doctest::Approx(-0.025));

    Rng rng1(8);
    const GroupAssignment single = construct_groups(pts, 1, rng1);
    CHECK(cluster_reward(pts, single, 0.1, 8) == doctest::Approx(-1.0 - 0.1 / 8.0));
    CHECK(cluster_reward(pts, single, 0.0, 8) == doctest::Approx(-1.0));

    // Degenerate data: identical points, reward reduces to the penalty.
    const Matrix same = points({{1, 1}, {1, 1}});
    Rng rng2(9);
    const GroupAssignment degenerate = construct_groups(same, 2, rng2);
    CHECK(cluster_reward(same, degenerate, 0.1, 8) == doctest::Approx(-0.025));
}

TEST_CASE("q_forward with zero weights is zero") {
    QNetwork net = init_qnetwork(4, 1, 5, 1);
    net.w1 = Matrix(4, 5);
    net.w2 = Matrix(5, 4);
    const std::vector<double> q = q_forward(net, {1, 2, 3, 4, 5});
    REQUIRE(q.size() == 5);
    for (double v : q) CHECK(v == 0.0);
}

TEST_CASE("q_forward matches hand arithmetic for one hidden unit") {
    QNetwork net;
    net.hidden = 1;
    net.k_min = 1;
    net.k_max = 2;
    net.w1 = Matrix(1, 5);
    for (int s = 0; s < 5; ++s) net.w1.at(0, s) = 0.5;
    net.b1 = {0.25};
    net.w2 = Matrix(2, 1);
    net.w2.at(0, 0) = 2.0;
    net.w2.at(1, 0) = -3.0;
    net.b2 = {1.0, 0.5};

    // state = unit vector: hidden = relu(0.5*1 + 0.25) = 0.75
    const std::vector<double> q = q_forward(net, {1, 0, 0, 0, 0});
    CHECK(q[0] == doctest::Approx(2.0 * 0.75 + 1.0));
    CHECK(q[1] == doctest::Approx(-3.0 * 0.75 + 0.5));

    // relu clamps a negative preactivation
    net.b1 = {-1.0};
    const std::vector<double> q2 = q_forward(net, {1, 0, 0, 0, 0});
    CHECK(q2[0] == doctest::Approx(1.0));
    CHECK(q2[1] == doctest::Approx(0.5));
}

TEST_CASE("select_k is greedy argmax at epsilon zero") {
    QNetwork net = init_qnetwork(2, 3, 5, 2);
    net.w1 = Matrix(2, 5);
    net.w2 = Matrix(3, 2);
    net.b2 = {0.1, 0.9, 0.3};
    Rng rng(1);
    CHECK(select_k(net, {}, 0.0, rng) == 4);  // k_min + argmax index 1

    net.b2 = {0.5, 0.5, 0.1};  // tie breaks toward the smaller K
    CHECK(select_k(net, {}, 0.0, rng) == 3);
}

TEST_CASE("select_k argmax is invariant to constant Q shifts") {
    QNetwork net = init_qnetwork(3, 1, 6, 33);
    Rng state_rng(5);
    for (int trial = 0; trial < 25; ++trial) {
        ClusterStateVec state{};
        for (double& v : state) v = state_rng.uniform(0.0, 1.0);
        Rng r1(9), r2(9);
        const int base = select_k(net, state, 0.0, r1);
        QNetwork shifted = net;
        for (double& b : shifted.b2) b += 17.5;
        CHECK(select_k(shifted, state, 0.0, r2) == base);
    }
}

TEST_CASE("select_k explores uniformly at epsilon one") {
    QNetwork net = init_qnetwork(2, 1, 4, 3);
    Rng rng(404);
    std::array<int, 4> counts{};
    const int trials = 10000;
    for (int t = 0; t < trials; ++t)
        ++counts[static_cast<std::size_t>(select_k(net, {}, 1.0, rng) - 1)];
    for (int count : counts)
        CHECK(std::abs(count / static_cast<double>(trials) - 0.25) < 0.05 * 0.25 + 0.02);
}

TEST_CASE("select_k honors the action cap") {
    QNetwork net = init_qnetwork(2, 1, 8, 4);
    net.b2.assign(8, 0.0);
    net.b2[7] = 5.0;  // argmax would be K = 8
    Rng rng(11);
    for (int t = 0; t < 50; ++t) CHECK(select_k(net, {}, 0.5, rng, 3) <= 3);
}

TEST_CASE("replay buffer evicts FIFO and samples deterministically") {
    ReplayBuffer buffer(3);
    for (int i = 0; i < 5; ++i) {
        Transition tr;
        tr.reward = i;
        buffer.push(tr);
    }
    CHECK(buffer.size() == 3);
    // Oldest two (rewards 0, 1) were evicted.
    std::set<double> kept;
    for (std::size_t i = 0; i < 3; ++i) kept.insert(buffer.at(i).reward);
    CHECK(kept == std::set<double>{2.0, 3.0, 4.0});

    Rng r1(5), r2(5);
    const auto s1 = buffer.sample(4, r1);
    const auto s2 = buffer.sample(4, r2);
    REQUIRE(s1.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(s1[i].reward == s2[i].reward);
}

namespace {

// Nets with constant Q rows: Q_online(s') = {0.2, 0.5}, Q_target(s') = {1.0, 2.0}.
QNetwork constant_net(std::vector<double> outputs) {
    QNetwork net;
    net.hidden = 1;
    net.k_min = 1;
    net.k_max = static_cast<int>(outputs.size());
    net.w1 = Matrix(1, 5);
    net.b1 = {0.0};
    net.w2 = Matrix(net.n_actions(), 1);
    net.b2 = std::move(outputs);
    return net;
}

}  // namespace

TEST_CASE("double-Q target uses the online argmax on the target net") {
    const QNetwork online = constant_net({0.2, 0.5});
    const QNetwork target = constant_net({1.0, 2.0});
    Transition tr;
    tr.reward = 1.0;
    tr.done = false;
    const auto targets = ddqn_targets(online, target, {tr}, 0.9);
    CHECK(targets[0] == doctest::Approx(1.0 + 0.9 * 2.0));

    Transition done_tr;
    done_tr.reward = 0.7;
    done_tr.done = true;
    CHECK(ddqn_targets(online, target, {done_tr}, 0.9)[0] == 0.7);

    Transition myopic = tr;
    CHECK(ddqn_targets(online, target, {myopic}, 0.0)[0] == doctest::Approx(1.0));
}

TEST_CASE("double-Q targets match the hand formula on a 20-transition fixture") {
    const QNetwork online = init_qnetwork(6, 1, 4, 71);
    const QNetwork target = init_qnetwork(6, 1, 4, 72);
    Rng rng(73);
    std::vector<Transition> batch;
    for (int i = 0; i < 20; ++i) {
        Transition tr;
        for (double& v : tr.state) v = rng.uniform(0.0, 1.0);
        for (double& v : tr.next_state) v = rng.uniform(0.0, 1.0);
        tr.action = static_cast<int>(rng.bounded(4));
        tr.reward = rng.uniform(-1.0, 1.0);
        tr.done = rng.uniform() < 0.2;
        batch.push_back(tr);
    }
    const auto targets = ddqn_targets(online, target, batch, 0.9);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const Transition& tr = batch[i];
        double expected = tr.reward;
        if (!tr.done) {
            const auto qo = q_forward(online, tr.next_state);
            const auto qt = q_forward(target, tr.next_state);
            int a_star = 0;
            for (int a = 1; a < 4; ++a)
                if (qo[static_cast<std::size_t>(a)] > qo[static_cast<std::size_t>(a_star)])
                    a_star = a;
            expected += 0.9 * qt[static_cast<std::size_t>(a_star)];
        }
        CHECK(targets[i] == expected);  // identical arithmetic, exact equality
    }
}

TEST_CASE("ddqn_update reports the pre-step loss and learns") {
    QNetwork online = constant_net({0.0, 0.0});
    const QNetwork target = constant_net({0.0, 0.0});
    Transition tr;
    tr.action = 0;
    tr.reward = 1.0;
    tr.done = true;
    // Pre-step: Q(s, a) = 0, y = 1 -> loss 1.
    const double loss = ddqn_update(online, target, {tr}, 0.9, 0.1);
    CHECK(loss == doctest::Approx(1.0));
    // The step moved Q(s, a) toward 1.
    const double after = q_forward(online, tr.state)[0];
    CHECK(after > 0.0);
    CHECK_THROWS_AS(ddqn_update(online, target, {}, 0.9, 0.1), EmptyBatch);
}

TEST_CASE("sync_target copies on the period and only then") {
    const QNetwork online = init_qnetwork(4, 1, 3, 11);
    QNetwork target = init_qnetwork(4, 1, 3, 12);

    CHECK_FALSE(sync_target(online, target, 50, 100));
    CHECK(target != online);
    CHECK(sync_target(online, target, 100, 100));
    CHECK(target == online);

    // period 1: every update syncs; probe agreement on random states
    QNetwork t2 = init_qnetwork(4, 1, 3, 13);
    CHECK(sync_target(online, t2, 1, 1));
    Rng rng(14);
    for (int probe = 0; probe < 10; ++probe) {
        ClusterStateVec s{};
        for (double& v : s) v = rng.uniform(-1.0, 1.0);
        CHECK(q_forward(online, s) == q_forward(t2, s));
    }
}

namespace {

/// Toy environment: K* well-separated blobs; reward follows cluster_reward.
class BlobEnv final : public GroupingEnv {
public:
    BlobEnv(int blobs, int per_blob, double lambda, int k_max)
        : blobs_(blobs), per_blob_(per_blob), lambda_(lambda), k_max_(k_max) {}

    ClusterStateVec reset(std::uint64_t episode_seed) override {
        Rng rng(episode_seed);
        features_ = Matrix(blobs_ * per_blob_, 2);
        for (int b = 0; b < blobs_; ++b) {
            const double cx = 10.0 * std::cos(2.0 * M_PI * b / blobs_);
            const double cy = 10.0 * std::sin(2.0 * M_PI * b / blobs_);
            for (int i = 0; i < per_blob_; ++i) {
                features_.at(b * per_blob_ + i, 0) = cx + rng.normal(0.0, 0.1);
                features_.at(b * per_blob_ + i, 1) = cy + rng.normal(0.0, 0.1);
            }
        }
        cluster_rng_ = std::make_unique<Rng>(episode_seed ^ 0xabcdef);
        prev_ratio_ = 1.0;
        prev_k_ = 1;
        return cluster_state(features_, prev_ratio_, prev_k_, k_max_, features_.rows);
    }

    std::pair<ClusterStateVec, double> step(int k) override {
        const GroupAssignment groups = construct_groups_best_of(features_, k, 10, *cluster_rng_);
        const double reward = cluster_reward(features_, groups, lambda_, k_max_);
        const double total = total_sum_squares(features_);
        prev_ratio_ = total > 0.0 ? groups.wcss / total : 0.0;
        prev_k_ = k;
        return {cluster_state(features_, prev_ratio_, prev_k_, k_max_, features_.rows), reward};
    }

    int max_k() const override { return k_max_; }

private:
    int blobs_;
    int per_blob_;
    double lambda_;
    int k_max_;
    Matrix features_;
    std::unique_ptr<Rng> cluster_rng_;
    double prev_ratio_ = 1.0;
    int prev_k_ = 1;
};

}  // namespace

TEST_CASE("ddqn training on three blobs prefers K = 3") {
    BlobEnv env(3, 4, 0.1, 8);
    DdqnHyper hyper;
    hyper.k_max = 8;
    hyper.episodes = 120;
    hyper.steps_per_episode = 6;
    hyper.seed = 2025;
    const DdqnTraining trained = train_ddqn(env, hyper);

    int good = 0;
    const int eval_episodes = 40;
    Rng eval_rng(909);
    for (int ep = 0; ep < eval_episodes; ++ep) {
        ClusterStateVec state = env.reset(7000 + static_cast<std::uint64_t>(ep));
        bool all_three = true;
        for (int s = 0; s < hyper.steps_per_episode; ++s) {
            const int k = select_k(trained.online, state, 0.0, eval_rng, env.max_k());
            all_three = all_three && k == 3;
            state = env.step(k).first;
        }
        if (all_three) ++good;
    }
    CHECK(good >= eval_episodes * 8 / 10);
}

TEST_CASE("qnetwork file round-trips exactly") {
    test_support::TempDir dir("ddqn");
    const QNetwork net = init_qnetwork(6, 2, 7, 99);
    save_qnetwork(net, dir.file("q.txt"));
    CHECK(load_qnetwork(dir.file("q.txt")) == net);

    FILE* f = std::fopen(dir.file("bad.txt").c_str(), "w");
    std::fputs("QQQ v1 1 1 1\n", f);
    std::fclose(f);
    CHECK_THROWS_AS(load_qnetwork(dir.file("bad.txt")), FormatVersionMismatch);
}
