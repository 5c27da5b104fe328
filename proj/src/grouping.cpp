#include "twinstream/grouping.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace twinstream {

namespace {

double squared_distance(const Matrix& a, int row_a, const Matrix& b, int row_b) {
    double acc = 0.0;
    for (int c = 0; c < a.cols; ++c) {
        const double diff = a.at(row_a, c) - b.at(row_b, c);
        acc += diff * diff;
    }
    return acc;
}

}  // namespace

std::pair<double, double> pairwise_stats(const Matrix& features) {
    const int n = features.rows;
    if (n < 2) throw TooFewUsers("pairwise stats need at least two users");
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double d = std::sqrt(squared_distance(features, i, features, j));
            sum += d;
            sum_sq += d * d;
        }
    }
    const double pairs = 0.5 * n * (n - 1);
    const double mean = sum / pairs;
    const double var = std::max(0.0, sum_sq / pairs - mean * mean);
    return {mean, std::sqrt(var)};
}

Matrix kmeanspp_seed(const Matrix& features, int k, Rng& rng) {
    const int n = features.rows;
    if (k < 1 || k > n)
        throw BadK("k=" + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");

    Matrix centroids(k, features.cols);
    std::vector<bool> chosen(static_cast<std::size_t>(n), false);
    std::vector<double> dist2(static_cast<std::size_t>(n),
                              std::numeric_limits<double>::infinity());

    auto adopt = [&](int slot, int point) {
        for (int c = 0; c < features.cols; ++c)
            centroids.at(slot, c) = features.at(point, c);
        chosen[static_cast<std::size_t>(point)] = true;
        for (int i = 0; i < n; ++i)
            dist2[static_cast<std::size_t>(i)] = std::min(
                dist2[static_cast<std::size_t>(i)], squared_distance(features, i, centroids, slot));
    };

    adopt(0, static_cast<int>(rng.bounded(static_cast<std::uint64_t>(n))));
    for (int slot = 1; slot < k; ++slot) {
        double total = 0.0;
        for (int i = 0; i < n; ++i)
            if (!chosen[static_cast<std::size_t>(i)]) total += dist2[static_cast<std::size_t>(i)];

        int pick = -1;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double cum = 0.0;
            for (int i = 0; i < n; ++i) {
                if (chosen[static_cast<std::size_t>(i)]) continue;
                cum += dist2[static_cast<std::size_t>(i)];
                if (cum > target) {
                    pick = i;
                    break;
                }
            }
            if (pick < 0) {  // guard against accumulated rounding at target ~ total
                for (int i = n - 1; i >= 0; --i)
                    if (!chosen[static_cast<std::size_t>(i)] &&
                        dist2[static_cast<std::size_t>(i)] > 0.0) {
                        pick = i;
                        break;
                    }
            }
        }
        if (pick < 0) {  // all remaining mass zero: lowest-index unchosen point
            for (int i = 0; i < n; ++i)
                if (!chosen[static_cast<std::size_t>(i)]) {
                    pick = i;
                    break;
                }
        }
        adopt(slot, pick);
    }
    return centroids;
}

namespace {

double assignment_wcss(const Matrix& features, const std::vector<int>& labels,
                       const Matrix& centroids) {
    double acc = 0.0;
    for (int i = 0; i < features.rows; ++i)
        acc += squared_distance(features, i, centroids, labels[static_cast<std::size_t>(i)]);
    return acc;
}

}  // namespace

GroupAssignment lloyd(const Matrix& features, Matrix centroids, double tol,
                      int max_iter, std::vector<double>* wcss_trace) {
    const int n = features.rows;
    const int k = centroids.rows;
    if (k < 1 || n < k) throw BadK("lloyd needs 1 <= k <= n");
    if (centroids.cols != features.cols) throw ShapeMismatch("centroid dimension mismatch");
    if (max_iter < 1) throw Error("max_iter must be >= 1");

    GroupAssignment out;
    out.k = k;
    out.labels.assign(static_cast<std::size_t>(n), 0);
    double prev_wcss = std::numeric_limits<double>::infinity();

    for (int iter = 0; iter < max_iter; ++iter) {
        // Nearest-centroid assignment, ties toward the lowest group index.
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double best_d = squared_distance(features, i, centroids, 0);
            for (int g = 1; g < k; ++g) {
                const double d = squared_distance(features, i, centroids, g);
                if (d < best_d) {
                    best_d = d;
                    best = g;
                }
            }
            out.labels[static_cast<std::size_t>(i)] = best;
        }

        // Reseed empty clusters with the point farthest from its centroid;
        // only points from clusters with at least two members are eligible.
        std::vector<int> counts(static_cast<std::size_t>(k), 0);
        for (int label : out.labels) ++counts[static_cast<std::size_t>(label)];
        for (int g = 0; g < k; ++g) {
            if (counts[static_cast<std::size_t>(g)] > 0) continue;
            int steal = -1;
            double steal_d = -1.0;
            for (int i = 0; i < n; ++i) {
                const int owner = out.labels[static_cast<std::size_t>(i)];
                if (counts[static_cast<std::size_t>(owner)] < 2) continue;
                const double d = squared_distance(features, i, centroids, owner);
                if (d > steal_d) {
                    steal_d = d;
                    steal = i;
                }
            }
            for (int c = 0; c < features.cols; ++c)
                centroids.at(g, c) = features.at(steal, c);
            --counts[static_cast<std::size_t>(out.labels[static_cast<std::size_t>(steal)])];
            out.labels[static_cast<std::size_t>(steal)] = g;
            ++counts[static_cast<std::size_t>(g)];
        }

        // Centroids become member means.
        centroids = Matrix(k, features.cols);
        for (int i = 0; i < n; ++i)
            for (int c = 0; c < features.cols; ++c)
                centroids.at(out.labels[static_cast<std::size_t>(i)], c) += features.at(i, c);
        for (int g = 0; g < k; ++g)
            for (int c = 0; c < features.cols; ++c)
                centroids.at(g, c) /= counts[static_cast<std::size_t>(g)];

        const double wcss = assignment_wcss(features, out.labels, centroids);
        if (wcss_trace) wcss_trace->push_back(wcss);
        if (prev_wcss - wcss < tol) {
            prev_wcss = wcss;
            break;
        }
        prev_wcss = wcss;
    }

    out.centroids = std::move(centroids);
    out.wcss = prev_wcss;
    return out;
}

GroupAssignment construct_groups(const Matrix& features, int k, Rng& rng) {
    return lloyd(features, kmeanspp_seed(features, k, rng), 1e-9, 100);
}

GroupAssignment construct_groups_best_of(const Matrix& features, int k, int restarts,
                                         Rng& rng) {
    GroupAssignment best;
    best.wcss = std::numeric_limits<double>::infinity();
    for (int r = 0; r < std::max(1, restarts); ++r) {
        GroupAssignment candidate = construct_groups(features, k, rng);
        if (candidate.wcss < best.wcss) best = std::move(candidate);
    }
    return best;
}

double total_sum_squares(const Matrix& features) {
    const int n = features.rows;
    if (n == 0) return 0.0;
    std::vector<double> mean(static_cast<std::size_t>(features.cols), 0.0);
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < features.cols; ++c) mean[static_cast<std::size_t>(c)] += features.at(i, c);
    for (double& m : mean) m /= n;
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < features.cols; ++c) {
            const double diff = features.at(i, c) - mean[static_cast<std::size_t>(c)];
            acc += diff * diff;
        }
    return acc;
}

double cluster_reward(const Matrix& features, const GroupAssignment& assignment,
                      double lambda, int k_max) {
    const double penalty = lambda * static_cast<double>(assignment.k) / k_max;
    const double total = total_sum_squares(features);
    if (total <= 0.0) return -penalty;  // degenerate data: pure grouping penalty
    return -assignment.wcss / total - penalty;
}

ClusterStateVec cluster_state(const Matrix& features, double prev_wcss_ratio,
                              int prev_k, int k_max, int n_max) {
    ClusterStateVec s{};
    s[0] = n_max > 0 ? static_cast<double>(features.rows) / n_max : 0.0;
    if (features.rows >= 2) {
        const auto [mean, stddev] = pairwise_stats(features);
        s[1] = mean;
        s[2] = stddev;
    }
    s[3] = prev_wcss_ratio;
    s[4] = k_max > 0 ? static_cast<double>(prev_k) / k_max : 0.0;
    return s;
}

QNetwork init_qnetwork(int hidden, int k_min, int k_max, std::uint64_t seed) {
    if (hidden < 1) throw Error("hidden size must be >= 1");
    if (k_min < 1 || k_max < k_min) throw BadK("need 1 <= k_min <= k_max");
    QNetwork net;
    net.hidden = hidden;
    net.k_min = k_min;
    net.k_max = k_max;
    net.w1 = Matrix(hidden, 5);
    net.b1.assign(static_cast<std::size_t>(hidden), 0.0);
    net.w2 = Matrix(net.n_actions(), hidden);
    net.b2.assign(static_cast<std::size_t>(net.n_actions()), 0.0);

    Rng rng(seed);
    const double bound1 = 1.0 / std::sqrt(5.0);
    for (double& w : net.w1.data) w = rng.uniform(-bound1, bound1);
    const double bound2 = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (double& w : net.w2.data) w = rng.uniform(-bound2, bound2);
    return net;
}

std::vector<double> q_forward(const QNetwork& net, const ClusterStateVec& state) {
    std::vector<double> hidden(static_cast<std::size_t>(net.hidden), 0.0);
    for (int h = 0; h < net.hidden; ++h) {
        double acc = net.b1[static_cast<std::size_t>(h)];
        for (int s = 0; s < 5; ++s) acc += net.w1.at(h, s) * state[static_cast<std::size_t>(s)];
        hidden[static_cast<std::size_t>(h)] = std::max(acc, 0.0);
    }
    std::vector<double> q(static_cast<std::size_t>(net.n_actions()), 0.0);
    for (int a = 0; a < net.n_actions(); ++a) {
        double acc = net.b2[static_cast<std::size_t>(a)];
        for (int h = 0; h < net.hidden; ++h)
            acc += net.w2.at(a, h) * hidden[static_cast<std::size_t>(h)];
        q[static_cast<std::size_t>(a)] = acc;
    }
    return q;
}

namespace {

int argmax_q(const std::vector<double>& q, int n_valid) {
    int best = 0;
    for (int a = 1; a < n_valid; ++a)
        if (q[static_cast<std::size_t>(a)] > q[static_cast<std::size_t>(best)]) best = a;
    return best;
}

}  // namespace

int select_k(const QNetwork& net, const ClusterStateVec& state, double epsilon,
             Rng& rng, int k_cap) {
    const int n_valid = std::max(
        1, std::min(net.n_actions(), k_cap - net.k_min + 1));
    if (rng.uniform() < epsilon)
        return net.k_min + static_cast<int>(rng.bounded(static_cast<std::uint64_t>(n_valid)));
    const std::vector<double> q = q_forward(net, state);
    return net.k_min + argmax_q(q, n_valid);
}

void ReplayBuffer::push(const Transition& tr) {
    if (ring_.size() < capacity_) {
        ring_.push_back(tr);
    } else {
        ring_[head_] = tr;
        head_ = (head_ + 1) % capacity_;
    }
}

std::vector<Transition> ReplayBuffer::sample(std::size_t batch, Rng& rng) const {
    std::vector<Transition> out;
    out.reserve(batch);
    for (std::size_t i = 0; i < batch; ++i)
        out.push_back(ring_[static_cast<std::size_t>(rng.bounded(ring_.size()))]);
    return out;
}

std::vector<double> ddqn_targets(const QNetwork& online, const QNetwork& target,
                                 const std::vector<Transition>& batch, double gamma) {
    std::vector<double> out;
    out.reserve(batch.size());
    for (const Transition& tr : batch) {
        if (tr.done) {
            out.push_back(tr.reward);
            continue;
        }
        // Action chosen by the online net, value read from the target net.
        const std::vector<double> q_online = q_forward(online, tr.next_state);
        const std::vector<double> q_target = q_forward(target, tr.next_state);
        const int a_star = argmax_q(q_online, online.n_actions());
        out.push_back(tr.reward + gamma * q_target[static_cast<std::size_t>(a_star)]);
    }
    return out;
}

double ddqn_update(QNetwork& online, const QNetwork& target,
                   const std::vector<Transition>& batch, double gamma, double lr) {
    if (batch.empty()) throw EmptyBatch("ddqn update needs a non-empty batch");
    const std::vector<double> targets = ddqn_targets(online, target, batch, gamma);

    Matrix g_w1(online.hidden, 5);
    std::vector<double> g_b1(static_cast<std::size_t>(online.hidden), 0.0);
    Matrix g_w2(online.n_actions(), online.hidden);
    std::vector<double> g_b2(static_cast<std::size_t>(online.n_actions()), 0.0);

    double loss = 0.0;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const Transition& tr = batch[b];
        // Forward with caches.
        std::vector<double> pre(static_cast<std::size_t>(online.hidden), 0.0);
        std::vector<double> hid(static_cast<std::size_t>(online.hidden), 0.0);
        for (int h = 0; h < online.hidden; ++h) {
            double acc = online.b1[static_cast<std::size_t>(h)];
            for (int s = 0; s < 5; ++s)
                acc += online.w1.at(h, s) * tr.state[static_cast<std::size_t>(s)];
            pre[static_cast<std::size_t>(h)] = acc;
            hid[static_cast<std::size_t>(h)] = std::max(acc, 0.0);
        }
        double q_sa = online.b2[static_cast<std::size_t>(tr.action)];
        for (int h = 0; h < online.hidden; ++h)
            q_sa += online.w2.at(tr.action, h) * hid[static_cast<std::size_t>(h)];

        const double err = q_sa - targets[b];
        loss += err * err;

        const double dq = 2.0 * err / static_cast<double>(batch.size());
        g_b2[static_cast<std::size_t>(tr.action)] += dq;
        for (int h = 0; h < online.hidden; ++h) {
            g_w2.at(tr.action, h) += dq * hid[static_cast<std::size_t>(h)];
            if (pre[static_cast<std::size_t>(h)] > 0.0) {
                const double dh = dq * online.w2.at(tr.action, h);
                g_b1[static_cast<std::size_t>(h)] += dh;
                for (int s = 0; s < 5; ++s)
                    g_w1.at(h, s) += dh * tr.state[static_cast<std::size_t>(s)];
            }
        }
    }
    loss /= static_cast<double>(batch.size());

    for (std::size_t i = 0; i < online.w1.data.size(); ++i) online.w1.data[i] -= lr * g_w1.data[i];
    for (std::size_t i = 0; i < online.b1.size(); ++i) online.b1[i] -= lr * g_b1[i];
    for (std::size_t i = 0; i < online.w2.data.size(); ++i) online.w2.data[i] -= lr * g_w2.data[i];
    for (std::size_t i = 0; i < online.b2.size(); ++i) online.b2[i] -= lr * g_b2[i];
    return loss;
}

bool sync_target(const QNetwork& online, QNetwork& target, long long update_count,
                 int period) {
    if (period < 1) throw Error("sync period must be >= 1");
    if (update_count % period != 0) return false;
    target = online;
    return true;
}

DdqnTraining train_ddqn(GroupingEnv& env, const DdqnHyper& hyper) {
    DdqnTraining out;
    out.online = init_qnetwork(hyper.hidden, hyper.k_min, hyper.k_max, hyper.seed);
    QNetwork target = out.online;
    ReplayBuffer replay(hyper.replay_capacity);
    Rng act_rng = Rng(hyper.seed).split(0x5e1ec7);
    Rng sample_rng = Rng(hyper.seed).split(0x5a3b1e);

    const long long total_steps =
        static_cast<long long>(hyper.episodes) * hyper.steps_per_episode;
    const double decay_steps = std::max(1.0, hyper.eps_fraction * total_steps);
    long long step_count = 0;
    long long updates = 0;

    for (int ep = 0; ep < hyper.episodes; ++ep) {
        ClusterStateVec state = env.reset(hyper.seed * 0x10001ULL + static_cast<std::uint64_t>(ep));
        double ep_reward = 0.0;
        for (int s = 0; s < hyper.steps_per_episode; ++s) {
            const double frac = std::min(1.0, static_cast<double>(step_count) / decay_steps);
            const double eps = hyper.eps_start + (hyper.eps_end - hyper.eps_start) * frac;
            const int k = select_k(out.online, state, eps, act_rng, env.max_k());

            const auto [next_state, reward] = env.step(k);
            Transition tr;
            tr.state = state;
            tr.action = k - hyper.k_min;
            tr.reward = reward;
            tr.next_state = next_state;
            tr.done = (s == hyper.steps_per_episode - 1);
            replay.push(tr);

            if (replay.size() >= static_cast<std::size_t>(hyper.batch)) {
                const auto batch = replay.sample(static_cast<std::size_t>(hyper.batch), sample_rng);
                ddqn_update(out.online, target, batch, hyper.gamma, hyper.lr);
                sync_target(out.online, target, ++updates, hyper.sync_period);
            }
            state = next_state;
            ep_reward += reward;
            ++step_count;
        }
        out.episode_mean_reward.push_back(ep_reward / hyper.steps_per_episode);
    }
    return out;
}

namespace {

void write_reals(std::ofstream& f, const std::vector<double>& values) {
    char buf[40];
    for (double v : values) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        f << buf << "\n";
    }
}

}  // namespace

void save_qnetwork(const QNetwork& net, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoFailure("cannot open " + path + " for writing");
    f << "DDQN v1 " << net.hidden << " " << net.k_min << " " << net.k_max << "\n";
    write_reals(f, net.w1.data);
    write_reals(f, net.b1);
    write_reals(f, net.w2.data);
    write_reals(f, net.b2);
    if (!f) throw IoFailure("write to " + path + " failed");
}

QNetwork load_qnetwork(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoFailure("cannot open " + path + " for reading");
    std::string magic, version;
    QNetwork net;
    if (!(f >> magic >> version >> net.hidden >> net.k_min >> net.k_max) ||
        magic != "DDQN" || version != "v1")
        throw FormatVersionMismatch("expected 'DDQN v1' header in " + path);

    auto read_reals = [&](std::vector<double>& out, std::size_t count) {
        out.resize(count);
        for (double& v : out)
            if (!(f >> v)) throw FormatVersionMismatch("truncated weights in " + path);
    };
    net.w1 = Matrix(net.hidden, 5);
    read_reals(net.w1.data, static_cast<std::size_t>(net.hidden) * 5);
    read_reals(net.b1, static_cast<std::size_t>(net.hidden));
    net.w2 = Matrix(net.n_actions(), net.hidden);
    read_reals(net.w2.data, static_cast<std::size_t>(net.n_actions()) * net.hidden);
    read_reals(net.b2, static_cast<std::size_t>(net.n_actions()));
    return net;
}

}  // namespace twinstream
