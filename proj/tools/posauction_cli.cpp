// posauction: run auctions, tabulate b*, verify identities, simulate revenue.
//
//   posauction run      --config exp.json [--out dir]
//   posauction tabulate --config exp.json [--grid 512]
//   posauction verify   --config exp.json --suite ode
//   posauction simulate --config exp.json --seed 7 [--samples 1000000]
//
// Exit status: 0 on success, 1 when a check fails, 2 on bad input.

#include <cstdint>
#include <ctime>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "posauction/errors.hpp"
#include "posauction/experiment.hpp"

namespace {

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> suite;
    std::optional<std::size_t> samples;
    std::optional<std::size_t> grid;
    bool rounds = false;
    bool timestamp = false;
};

posauction::ExperimentConfig effective_config(const Options& opt) {
    auto config = posauction::ExperimentConfig::load(opt.config);
    if (opt.seed) config.seed = *opt.seed;
    if (opt.out) config.output = *opt.out;
    if (opt.samples) config.samples = *opt.samples;
    if (opt.grid) config.grid = *opt.grid;
    if (opt.rounds) config.rounds_csv = true;
    return config;
}

std::string utc_now() {
    const std::time_t now = std::time(nullptr);
    std::tm utc{};
    gmtime_r(&now, &utc);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
    return buf;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Position auction engine: auctions, equilibrium bids, verification, simulation"};
    app.require_subcommand(1);

    Options opt;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", opt.config, "Experiment config (JSON)")->required();
        cmd->add_option("--out", opt.out, "Output directory (overrides config)");
        cmd->add_flag("--timestamp", opt.timestamp, "Record the wall-clock time in summary.json");
    };

    auto* run = app.add_subcommand("run", "Run one auction with explicit values");
    add_common(run);

    auto* tabulate = app.add_subcommand("tabulate", "Tabulate the equilibrium bids b*");
    add_common(tabulate);
    tabulate->add_option("--grid", opt.grid, "Grid points")->check(CLI::PositiveNumber);

    auto* verify = app.add_subcommand("verify", "Run a verification suite");
    add_common(verify);
    verify->add_option("--suite", opt.suite, "nash, lemma1, lemma2, ode, aux, monotone, payment-identity")
        ->required();
    verify->add_option("--grid", opt.grid, "Grid points")->check(CLI::PositiveNumber);

    auto* simulate = app.add_subcommand("simulate", "Simulate GFP under b* against truthful VCG");
    add_common(simulate);
    simulate->add_option("--seed", opt.seed, "Random seed");
    simulate->add_option("--samples", opt.samples, "Rounds")->check(CLI::PositiveNumber);
    simulate->add_option("--grid", opt.grid, "Bid-table grid points")->check(CLI::PositiveNumber);
    simulate->add_flag("--rounds", opt.rounds, "Also write rounds.csv");

    CLI11_PARSE(app, argc, argv);

    try {
        const auto config = effective_config(opt);
        posauction::ResultRecord record;
        if (run->parsed()) {
            record = posauction::cmd_run(config);
        } else if (tabulate->parsed()) {
            record = posauction::cmd_tabulate(config);
        } else if (verify->parsed()) {
            record = posauction::cmd_verify(config, *opt.suite);
        } else {
            record = posauction::cmd_simulate(config);
        }
        if (opt.timestamp) record.timestamp = utc_now();
        record.write(config.output);

        std::cout << record.command << ": " << (record.passed ? "pass" : "FAIL") << "  ("
                  << config.output.string() << ")\n";
        for (const auto& [key, value] : record.scalars.items()) {
            std::cout << "  " << key << " = " << value.dump() << '\n';
        }
        return record.passed ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
