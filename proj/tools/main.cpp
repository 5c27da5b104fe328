#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "twinstream/cli.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out = "out";
    bool has_seed = false;
    std::uint64_t seed = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "Scenario config file")->required();
    cmd->add_option("--out", args.out, "Output directory or weights file");
    cmd->add_option("--seed", args.seed, "Override the scenario seed")
        ->each([&args](const std::string&) { args.has_seed = true; });
}

twinstream::ScenarioConfig load(const CommonArgs& args) {
    twinstream::ScenarioConfig cfg = twinstream::load_config(args.config_path);
    if (args.has_seed) cfg.seed = args.seed;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Digital-twin multicast short-video resource demand simulator"};
    app.require_subcommand(1);

    CommonArgs run_args, enc_args, ddqn_args, trace_args;
    std::string trace_path;

    CLI::App* run = app.add_subcommand("run", "Run all intervals and write reports");
    add_common(run, run_args);
    enc_args.out = "encoder.txt";
    CLI::App* train_enc = app.add_subcommand("train-encoder", "Train the status autoencoder");
    add_common(train_enc, enc_args);
    ddqn_args.out = "ddqn.txt";
    CLI::App* train_ddqn = app.add_subcommand("train-ddqn", "Train the grouping DDQN");
    add_common(train_ddqn, ddqn_args);
    CLI::App* import_trace =
        app.add_subcommand("import-trace", "Abstract swipe CDFs from a watch-trace CSV");
    add_common(import_trace, trace_args);
    import_trace->add_option("--trace", trace_path, "Watch-trace CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 1;
    }

    try {
        if (run->parsed()) return twinstream::cmd_run(load(run_args), run_args.out);
        if (train_enc->parsed())
            return twinstream::cmd_train_encoder(load(enc_args), enc_args.out);
        if (train_ddqn->parsed())
            return twinstream::cmd_train_ddqn(load(ddqn_args), ddqn_args.out);
        if (import_trace->parsed())
            return twinstream::cmd_import_trace(load(trace_args), trace_path, trace_args.out);
    } catch (const twinstream::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 1;
}
