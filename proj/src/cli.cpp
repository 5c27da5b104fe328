#include "twinstream/cli.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <memory>

#include "twinstream/report.hpp"
#include "twinstream/world.hpp"

namespace twinstream {

namespace {

void ensure_directory(const std::string& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoFailure("cannot create output directory " + out_dir + ": " + ec.message());
}

QNetwork scenario_qnetwork(const ScenarioConfig& cfg) {
    if (!cfg.ddqn.weights.empty()) return load_qnetwork(cfg.ddqn.weights);
    return init_qnetwork(cfg.ddqn.hidden, cfg.ddqn.k_min, cfg.effective_k_max(),
                         Rng(cfg.seed).split(0xddc0).seed());
}

}  // namespace

int cmd_run(const ScenarioConfig& cfg, const std::string& out_dir) {
    const auto t0 = std::chrono::steady_clock::now();
    ensure_directory(out_dir);

    World world(cfg);
    const QNetwork net = scenario_qnetwork(cfg);
    Rng select_rng = Rng(cfg.seed).split(0x5e1);

    std::vector<IntervalRow> rows;
    std::vector<CdfRow> cdf_rows;
    for (int i = 0; i < cfg.n_intervals; ++i) {
        IntervalResult res = world.run_next(net, 0.0, select_rng);  // greedy evaluation
        rows.insert(rows.end(), res.rows.begin(), res.rows.end());
        cdf_rows.insert(cdf_rows.end(), res.cdf_rows.begin(), res.cdf_rows.end());
    }

    const double runtime_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_text_file(out_dir + "/intervals.csv", intervals_csv_text(rows));
    write_text_file(out_dir + "/cdf.csv", cdf_csv_text(cdf_rows));
    const RunSummary summary = summarize(rows, cfg.n_intervals, runtime_s);
    write_text_file(out_dir + "/summary.txt", summary_text(summary));
    std::printf("%s", summary_text(summary).c_str());
    return 0;
}

int cmd_train_encoder(const ScenarioConfig& cfg, const std::string& out_path) {
    // Collect status matrices across a simulated run (single-group policy is
    // enough for representative telemetry).
    World world(cfg);
    std::vector<Matrix> dataset = world.status_dataset();
    for (int i = 0; i < cfg.n_intervals; ++i) {
        world.begin_interval();
        world.complete_interval(1);
        const std::vector<Matrix> snapshot = world.status_dataset();
        dataset.insert(dataset.end(), snapshot.begin(), snapshot.end());
    }
    if (dataset.empty()) throw EmptyDataset("scenario produced no status matrices");

    EncoderHyper hyper;
    hyper.filters = cfg.encoder.filters;
    hyper.taps = cfg.encoder.taps;
    hyper.dim = cfg.encoder.dim;
    hyper.lr = cfg.encoder.lr;
    hyper.epochs = cfg.encoder.epochs;
    hyper.batch = cfg.encoder.batch;
    hyper.seed = cfg.seed;
    const AutoencoderTraining trained = train_autoencoder(dataset, hyper);
    save_encoder(trained.encoder, out_path);

    std::printf("samples: %zu\n", dataset.size());
    if (!trained.loss_curve.empty()) {
        std::printf("initial_loss: %.6f\n", trained.loss_curve.front());
        std::printf("final_loss: %.6f\n", trained.loss_curve.back());
    } else {
        std::printf("final_loss: untrained (epochs=0)\n");
    }
    return 0;
}

namespace {

/// DDQN environment backed by the full simulated pipeline: one episode is a
/// fresh scenario day, one step is a grouping decision for one interval.
class WorldEnv final : public GroupingEnv {
public:
    explicit WorldEnv(const ScenarioConfig& cfg) : cfg_(cfg) {}

    ClusterStateVec reset(std::uint64_t episode_seed) override {
        ScenarioConfig episode_cfg = cfg_;
        episode_cfg.seed = episode_seed;
        world_ = std::make_unique<World>(episode_cfg);
        return world_->begin_interval();
    }

    std::pair<ClusterStateVec, double> step(int k) override {
        const IntervalResult res = world_->complete_interval(k);
        return {world_->begin_interval(), res.reward};
    }

    int max_k() const override { return world_ ? world_->max_k() : cfg_.effective_k_max(); }

private:
    ScenarioConfig cfg_;
    std::unique_ptr<World> world_;
};

}  // namespace

int cmd_train_ddqn(const ScenarioConfig& cfg, const std::string& out_path) {
    WorldEnv env(cfg);
    DdqnHyper hyper;
    hyper.hidden = cfg.ddqn.hidden;
    hyper.k_min = cfg.ddqn.k_min;
    hyper.k_max = cfg.effective_k_max();
    hyper.gamma = cfg.ddqn.gamma;
    hyper.lambda = cfg.ddqn.lambda;
    hyper.lr = cfg.ddqn.lr;
    hyper.episodes = cfg.ddqn.episodes;
    hyper.steps_per_episode = cfg.ddqn.steps_per_episode;
    hyper.replay_capacity = static_cast<std::size_t>(cfg.ddqn.replay);
    hyper.batch = cfg.ddqn.batch;
    hyper.sync_period = cfg.ddqn.sync;
    hyper.eps_start = cfg.ddqn.eps_start;
    hyper.eps_end = cfg.ddqn.eps_end;
    hyper.eps_fraction = cfg.ddqn.eps_fraction;
    hyper.seed = cfg.seed;

    const DdqnTraining trained = train_ddqn(env, hyper);
    save_qnetwork(trained.online, out_path);

    const std::size_t tail = std::max<std::size_t>(1, trained.episode_mean_reward.size() / 10);
    double tail_reward = 0.0;
    for (std::size_t i = trained.episode_mean_reward.size() - tail;
         i < trained.episode_mean_reward.size(); ++i)
        tail_reward += trained.episode_mean_reward[i];
    std::printf("episodes: %zu\n", trained.episode_mean_reward.size());
    std::printf("mean_reward_last_10pct: %.6f\n", tail_reward / static_cast<double>(tail));
    return 0;
}

int cmd_import_trace(const ScenarioConfig& cfg, const std::string& trace_path,
                     const std::string& out_dir) {
    ensure_directory(out_dir);
    const std::vector<WatchRecord> records = parse_watch_trace(trace_path);

    SwipeCdf cdf(cfg.n_categories, cfg.abstraction.bins);
    cdf = update_swipe_cdf(records, cdf, cfg.abstraction.decay);

    std::vector<CdfRow> rows;
    for (int c = 0; c < cfg.n_categories; ++c)
        for (int b = 0; b <= cfg.abstraction.bins; ++b)
            rows.push_back({0, 0, c, static_cast<double>(b) / cfg.abstraction.bins,
                            cdf.f.at(c, b)});
    write_text_file(out_dir + "/cdf.csv", cdf_csv_text(rows));

    std::string summary = "records: " + std::to_string(records.size()) + "\n";
    long long completed = 0;
    for (const WatchRecord& r : records) completed += r.completed ? 1 : 0;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f",
                  records.empty() ? 0.0
                                  : static_cast<double>(completed) /
                                        static_cast<double>(records.size()));
    summary += "completion_rate: " + std::string(buf) + "\n";
    for (int c = 0; c < cfg.n_categories; ++c)
        summary += "category_" + std::to_string(c) +
                   "_records: " + std::to_string(cdf.count[static_cast<std::size_t>(c)]) + "\n";
    write_text_file(out_dir + "/summary.txt", summary);
    std::printf("%s", summary.c_str());
    return 0;
}

}  // namespace twinstream
