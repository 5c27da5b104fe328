#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "twinstream/errors.hpp"
#include "twinstream/matrix.hpp"
#include "twinstream/rng.hpp"

namespace twinstream {

/// Partition of users into K non-empty groups; centroids are the member means.
struct GroupAssignment {
    int k = 0;
    std::vector<int> labels;  // per-row group index in [0, k)
    Matrix centroids;         // k x d
    double wcss = 0.0;
};

/// Summary of a clustering situation fed to the DDQN:
/// {n/N_max, mean pairwise distance, std pairwise distance,
///  previous WCSS/totalSS, previous K/K_max}.
using ClusterStateVec = std::array<double, 5>;

/// Mean and population std of Euclidean distances over all unordered pairs.
/// Throws TooFewUsers for fewer than two rows.
std::pair<double, double> pairwise_stats(const Matrix& features);

/// Standard D^2 seeding: first centroid uniform, each next proportional to
/// squared distance to the nearest chosen one; zero remaining mass falls back
/// to the lowest-index unchosen point. Throws BadK unless 1 <= k <= n.
Matrix kmeanspp_seed(const Matrix& features, int k, Rng& rng);

/// Lloyd iterations from the given centroids. Ties assign to the lowest group
/// index; an empty cluster is reseeded with the point farthest from its
/// assigned centroid. Stops when the WCSS improvement drops below tol or
/// after max_iter iterations; per-iteration WCSS is appended to wcss_trace
/// when provided (non-increasing).
GroupAssignment lloyd(const Matrix& features, Matrix centroids, double tol,
                      int max_iter, std::vector<double>* wcss_trace = nullptr);

/// kmeanspp_seed followed by lloyd (tol 1e-9, max_iter 100).
GroupAssignment construct_groups(const Matrix& features, int k, Rng& rng);

/// Best WCSS over `restarts` independent seedings (ties keep the first).
GroupAssignment construct_groups_best_of(const Matrix& features, int k, int restarts,
                                         Rng& rng);

/// Sum of squared distances to the global mean.
double total_sum_squares(const Matrix& features);

/// r = -WCSS/totalSS - lambda*K/K_max. Degenerate data (totalSS = 0) yields
/// the pure grouping penalty -lambda*K/K_max.
double cluster_reward(const Matrix& features, const GroupAssignment& assignment,
                      double lambda, int k_max);

/// DDQN state featurization; with fewer than two users the distance stats are 0.
ClusterStateVec cluster_state(const Matrix& features, double prev_wcss_ratio,
                              int prev_k, int k_max, int n_max);

/// Two-layer perceptron over ClusterStateVec; one output per candidate K.
struct QNetwork {
    int hidden = 0;
    int k_min = 1;
    int k_max = 1;
    Matrix w1;                // hidden x 5
    std::vector<double> b1;   // hidden
    Matrix w2;                // n_actions x hidden
    std::vector<double> b2;   // n_actions

    int n_actions() const { return k_max - k_min + 1; }
    bool operator==(const QNetwork&) const = default;
};

QNetwork init_qnetwork(int hidden, int k_min, int k_max, std::uint64_t seed);

/// Relu hidden layer, linear output; deterministic.
std::vector<double> q_forward(const QNetwork& net, const ClusterStateVec& state);

/// Epsilon-greedy grouping number: uniform action with probability epsilon,
/// otherwise argmax Q (ties toward the smallest K). `k_cap` masks actions
/// whose K exceeds it (never binds at its default).
int select_k(const QNetwork& net, const ClusterStateVec& state, double epsilon,
             Rng& rng, int k_cap = std::numeric_limits<int>::max());

struct Transition {
    ClusterStateVec state{};
    int action = 0;  // index into the action set, i.e. K - k_min
    double reward = 0.0;
    ClusterStateVec next_state{};
    bool done = false;
};

/// FIFO ring of transitions.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

    std::size_t size() const { return ring_.size(); }
    std::size_t capacity() const { return capacity_; }
    void push(const Transition& tr);
    const Transition& at(std::size_t i) const { return ring_[i]; }

    /// Uniform sample with replacement; deterministic given rng.
    std::vector<Transition> sample(std::size_t batch, Rng& rng) const;

private:
    std::size_t capacity_;
    std::size_t head_ = 0;
    std::vector<Transition> ring_;
};

/// Per-transition double-Q targets:
/// y = r, or r + gamma * Q_target(s', argmax_a Q_online(s', a)) when not done.
std::vector<double> ddqn_targets(const QNetwork& online, const QNetwork& target,
                                 const std::vector<Transition>& batch, double gamma);

/// One SGD step of Q_online(s, a) toward the double-Q targets on the mean
/// squared TD error; returns the pre-step loss. Throws EmptyBatch.
double ddqn_update(QNetwork& online, const QNetwork& target,
                   const std::vector<Transition>& batch, double gamma, double lr);

/// Hard-copies online into target every `period` completed updates
/// (update_count is 1-based); returns whether a copy happened.
bool sync_target(const QNetwork& online, QNetwork& target, long long update_count,
                 int period);

struct DdqnHyper {
    int hidden = 32;
    int k_min = 1;
    int k_max = 8;
    double gamma = 0.9;
    double lambda = 0.1;
    double lr = 1e-3;
    int episodes = 150;
    int steps_per_episode = 8;
    std::size_t replay_capacity = 4096;
    int batch = 32;
    int sync_period = 64;
    double eps_start = 1.0;
    double eps_end = 0.05;
    double eps_fraction = 0.8;  // decay over this fraction of total steps
    std::uint64_t seed = 1;
};

/// Environment abstraction for DDQN training: one episode spans a fixed
/// number of grouping decisions.
class GroupingEnv {
public:
    virtual ~GroupingEnv() = default;
    virtual ClusterStateVec reset(std::uint64_t episode_seed) = 0;
    virtual std::pair<ClusterStateVec, double> step(int k) = 0;
    virtual int max_k() const = 0;
};

struct DdqnTraining {
    QNetwork online;
    std::vector<double> episode_mean_reward;
};

/// Epsilon-greedy DDQN training with replay and periodic target sync;
/// fully deterministic given hyper.seed.
DdqnTraining train_ddqn(GroupingEnv& env, const DdqnHyper& hyper);

/// Text format: header "DDQN v1 H K_min K_max", then W1 row-major, b1,
/// W2 row-major, b2, 17 significant digits.
void save_qnetwork(const QNetwork& net, const std::string& path);
QNetwork load_qnetwork(const std::string& path);

}  // namespace twinstream
