#pragma once

// Configuration-driven experiments behind the command-line tool: run an
// auction, tabulate b*, run a verification suite, simulate revenue.
//
// One experiment per JSON document. Every command is a pure function of the
// effective configuration (file plus command-line overrides); its content
// digest is stamped into each result.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "posauction/auction.hpp"
#include "posauction/bayes.hpp"
#include "posauction/quadrature.hpp"

namespace posauction {

inline constexpr std::string_view kSuites[] = {"nash", "lemma1", "lemma2", "ode",
                                               "aux",  "monotone", "payment-identity"};

// Tolerances and grids of the verification suites. Unset tolerances use the
// per-suite defaults (see default_tolerance()).
struct VerifyOptions {
    std::optional<double> tolerance;
    std::optional<double> step;          // finite-difference step h
    std::optional<std::size_t> points;   // interior grid points per axis
    std::size_t max_opponents = 5;       // aux suite: largest m
    double nash_grid_fraction = 1e-3;    // deviation grid step / max value
};

struct ExperimentConfig {
    MechanismSpec mechanism;
    SlotCurve curve;
    // Complete information: explicit values. Incomplete: n and a distribution.
    std::optional<ValueProfile> values;
    std::optional<std::size_t> agents;
    std::optional<std::string> distribution;
    // "equilibrium", "truthful", an n x k matrix, or n scalar bids.
    nlohmann::json bids;
    // Optional 1-based {"position": agent} tie-break hints.
    nlohmann::json tie_hint;
    QuadratureConfig quadrature;
    std::size_t grid = 512;
    std::size_t samples = 100000;
    std::optional<std::uint64_t> seed;
    std::filesystem::path output = "out";
    bool rounds_csv = false;
    VerifyOptions verify;

    static ExperimentConfig from_json(const nlohmann::json& doc);
    static ExperimentConfig load(const std::filesystem::path& path);
    nlohmann::json to_json() const;
    // FNV-1a 64 of the canonical JSON form, as 16 hex digits.
    std::string digest() const;

    BayesSetting bayes_setting() const;
};

struct CsvTable {
    std::string name;  // file stem
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::string render() const;
};

struct ResultRecord {
    std::string command;
    std::string config_digest;
    bool passed = true;
    nlohmann::json scalars = nlohmann::json::object();
    std::vector<CsvTable> tables;
    // Extra artifacts written verbatim (file name -> content).
    std::map<std::string, std::string> files;
    std::optional<std::string> timestamp;

    nlohmann::json summary() const;
    // Writes summary.json, <table>.csv and the extra files into `dir`.
    void write(const std::filesystem::path& dir) const;
};

double default_tolerance(std::string_view suite);

ResultRecord cmd_run(const ExperimentConfig& config);
ResultRecord cmd_tabulate(const ExperimentConfig& config);
ResultRecord cmd_verify(const ExperimentConfig& config, std::string_view suite);
ResultRecord cmd_simulate(const ExperimentConfig& config);

}  // namespace posauction
