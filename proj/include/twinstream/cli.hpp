#pragma once

#include <string>

#include "twinstream/config.hpp"

namespace twinstream {

/// Run all intervals and write intervals.csv, cdf.csv and summary.txt into
/// out_dir. Returns 0 on success; module errors propagate as exceptions.
int cmd_run(const ScenarioConfig& cfg, const std::string& out_dir);

/// Train the status autoencoder on simulated twin data and write the weights
/// file; prints the final loss.
int cmd_train_encoder(const ScenarioConfig& cfg, const std::string& out_path);

/// Train the grouping DDQN against the simulated pipeline and write the
/// weights file; prints the late-training mean reward.
int cmd_train_ddqn(const ScenarioConfig& cfg, const std::string& out_path);

/// Import a watch-trace CSV, abstract per-category swipe CDFs from it, and
/// write cdf.csv plus summary.txt into out_dir.
int cmd_import_trace(const ScenarioConfig& cfg, const std::string& trace_path,
                     const std::string& out_dir);

}  // namespace twinstream
