#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "posauction/bid_table.hpp"
#include "posauction/complete_info.hpp"
#include "posauction/errors.hpp"
#include "posauction/experiment.hpp"

using namespace posauction;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const json kRun = json::parse(R"({
  "mechanism": {"payment_rule": "first-price"},
  "curve": [2, 1],
  "agents": {"values": [3, 2, 1]},
  "bids": "equilibrium"
})");

const json kBayes = json::parse(R"({
  "curve": [2, 1],
  "agents": {"n": 4, "distribution": "uniform"},
  "grid": 65,
  "samples": 20000,
  "seed": 7
})");

json with(json doc, const json& patch) {
    doc.merge_patch(patch);
    return doc;
}

const CsvTable& table(const ResultRecord& r, const std::string& name) {
    for (const auto& t : r.tables) {
        if (t.name == name) return t;
    }
    throw std::runtime_error("no table " + name);
}

std::vector<double> column(const CsvTable& t, const std::string& name) {
    const auto it = std::find(t.header.begin(), t.header.end(), name);
    if (it == t.header.end()) throw std::runtime_error("no column " + name);
    const auto c = static_cast<std::size_t>(it - t.header.begin());
    std::vector<double> out;
    for (const auto& row : t.rows) out.push_back(std::stod(row[c]));
    return out;
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("posauction_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

// Runs the CLI binary; returns its exit status.
int cli(const std::string& args) {
    const char* exe = std::getenv("POSAUCTION_CLI");
    if (!exe) return -1;
    const int status = std::system((std::string(exe) + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_config(const fs::path& dir, const json& doc) {
    const auto path = dir / "config.json";
    std::ofstream(path) << doc.dump(2);
    return path;
}

}  // namespace

TEST(Config, ParsesBothSettings) {
    const auto run = ExperimentConfig::from_json(kRun);
    ASSERT_TRUE(run.values.has_value());
    EXPECT_EQ(run.values->n(), 3u);
    EXPECT_EQ(run.curve.k(), 2u);
    EXPECT_EQ(run.mechanism.payment_rule, PaymentRule::FirstPrice);
    EXPECT_THROW(run.bayes_setting(), ConfigError);

    const auto bayes = ExperimentConfig::from_json(kBayes);
    EXPECT_EQ(*bayes.agents, 4u);
    EXPECT_EQ(*bayes.seed, 7u);
    EXPECT_EQ(bayes.bayes_setting().n(), 4u);
    EXPECT_THROW(ExperimentConfig::from_json(with(kBayes, {{"agents", {{"n", 2}}}})).bayes_setting(),
                 DomainError);
}

TEST(Config, RejectsMalformedDocuments) {
    const auto bad = [](const json& doc) { return ExperimentConfig::from_json(doc); };
    EXPECT_THROW(bad(with(kRun, {{"colour", "red"}})), ConfigError);
    EXPECT_THROW(bad(with(kRun, {{"agents", {{"n", 3}, {"distribution", "uniform"}}}})),
                 ConfigError);
    auto no_agents = kRun;
    no_agents["agents"] = json::object();
    EXPECT_THROW(bad(no_agents), ConfigError);
    EXPECT_THROW(bad(with(kRun, {{"mechanism", {{"payment_rule", "dutch"}}}})), ConfigError);
    EXPECT_THROW(bad(with(kRun, {{"mechanism", {{"bid_space", "simplified"}}}})), ConfigError);
    EXPECT_THROW(
        bad(with(kRun, {{"mechanism", {{"bid_space", "simplified"}, {"alphas", {1, 1, 1}}}}})),
        ConfigError);
    EXPECT_THROW(bad(with(kRun, {{"curve", "flat"}})), ConfigError);
    EXPECT_THROW(bad(with(kBayes, {{"agents", {{"distribution", "cauchy"}}}})), ConfigError);
    EXPECT_THROW(ExperimentConfig::load("/nonexistent/config.json"), ConfigError);
}

TEST(Config, LoadAcceptsComments) {
    const auto dir = scratch("comments");
    const auto path = dir / "c.json";
    std::ofstream(path) << "// first-price run\n" << kRun.dump(2) << "\n";
    EXPECT_EQ(ExperimentConfig::load(path).digest(), ExperimentConfig::from_json(kRun).digest());
}

TEST(Config, DigestTracksContentNotOutput) {
    const auto a = ExperimentConfig::from_json(kBayes);
    const auto b = ExperimentConfig::from_json(with(kBayes, {{"output", "elsewhere"}}));
    const auto c = ExperimentConfig::from_json(with(kBayes, {{"seed", 8}}));
    EXPECT_EQ(a.digest(), b.digest());
    EXPECT_NE(a.digest(), c.digest());
    EXPECT_EQ(a.digest().size(), 16u);
    EXPECT_EQ(ExperimentConfig::from_json(a.to_json()).digest(), a.digest());
}

TEST(Run, FirstPriceEquilibriumBids) {
    const auto r = cmd_run(ExperimentConfig::from_json(kRun));
    const auto& t = table(r, "outcome");
    EXPECT_EQ(column(t, "payment"), (std::vector<double>{3, 1, 0}));
    EXPECT_EQ(t.header[2], "position");
    EXPECT_EQ(t.rows[0][2], "1");
    EXPECT_EQ(t.rows[1][2], "2");
    EXPECT_EQ(t.rows[2][2], "");  // agent 3 gets no position
    EXPECT_TRUE(r.scalars["efficient"].get<bool>());
    EXPECT_EQ(r.scalars["revenue"].get<double>(), 4.0);
}

TEST(Run, VcgTruthfulMatchesClosedForm) {
    const auto r = cmd_run(ExperimentConfig::from_json(
        with(kRun, {{"mechanism", {{"payment_rule", "vcg"}}}, {"bids", "truthful"},
                    {"agents", {{"values", {1.5, 4, 2.5, 0.5}}}}})));
    const auto vcg = truthful_vcg(ValueProfile({1.5, 4, 2.5, 0.5}), SlotCurve({2, 1}));
    const auto pay = column(table(r, "outcome"), "payment");
    EXPECT_NEAR(pay[1], vcg.payments[0], 1e-12);
    EXPECT_NEAR(pay[2], vcg.payments[1], 1e-12);
    EXPECT_EQ(pay[0], 0.0);
    EXPECT_EQ(pay[3], 0.0);
}

TEST(Run, SimplifiedGspPaysScaledNextBid) {
    const auto r = cmd_run(ExperimentConfig::from_json(with(
        kRun, {{"mechanism",
                {{"payment_rule", "gsp"}, {"bid_space", "simplified"}, {"alphas", {2, 1}}}},
               {"bids", "truthful"}})));
    EXPECT_EQ(column(table(r, "outcome"), "payment"), (std::vector<double>{4, 1, 0}));
}

TEST(Run, ShapeAndModeErrors) {
    EXPECT_THROW(cmd_run(ExperimentConfig::from_json(with(kRun, {{"bids", {{3, 0}, {3, 1}}}}))),
                 DimensionError);
    EXPECT_THROW(cmd_run(ExperimentConfig::from_json(with(kRun, {{"bids", {{3, 0, 1}, {3, 1, 0}, {1, 1, 1}}}}))),
                 DimensionError);
    EXPECT_THROW(cmd_run(ExperimentConfig::from_json(kBayes)), ConfigError);
    const auto explicit_bids = cmd_run(
        ExperimentConfig::from_json(with(kRun, {{"bids", {{3, 0}, {3, 1}, {2, 1}}},
                                                {"tie_hint", {{"1", 1}, {"2", 2}}}})));
    EXPECT_EQ(column(table(explicit_bids, "outcome"), "payment"), (std::vector<double>{3, 1, 0}));
}

TEST(Tabulate, UniformTwoAgents) {
    const auto config = ExperimentConfig::from_json(
        with(kBayes, {{"curve", {1}}, {"agents", {{"n", 2}}}, {"grid", 17}}));
    const auto r = cmd_tabulate(config);
    EXPECT_TRUE(r.passed);
    std::istringstream in(r.files.at("bid_table.txt"));
    const auto t = EquilibriumBidTable::read(in);
    ASSERT_EQ(t.size(), 17u);
    for (std::size_t g = 0; g < t.size(); ++g) EXPECT_NEAR(t.rows()[g][0], t.grid()[g] / 2, 1e-7);
}

TEST(Tabulate, EndpointGridAndErrors) {
    const auto r = cmd_tabulate(ExperimentConfig::from_json(with(kBayes, {{"grid", 2}})));
    std::istringstream in(r.files.at("bid_table.txt"));
    const auto t = EquilibriumBidTable::read(in);
    EXPECT_EQ(t.rows()[0], (std::vector<double>{0, 0}));
    EXPECT_EQ(t.grid()[1], 1.0);
    EXPECT_TRUE(r.scalars["cone"].get<bool>());
    EXPECT_THROW(cmd_tabulate(ExperimentConfig::from_json(with(kBayes, {{"agents", {{"n", 2}}}}))),
                 DomainError);
}

TEST(Verify, SuitesPassOnCorrectInputs) {
    const auto bayes = ExperimentConfig::from_json(kBayes);
    for (const char* suite : {"ode", "lemma1", "lemma2", "aux", "monotone", "payment-identity"}) {
        const auto r = cmd_verify(bayes, suite);
        EXPECT_TRUE(r.passed) << suite << ": " << r.scalars.dump();
        EXPECT_FALSE(r.tables.empty()) << suite;
    }
    EXPECT_TRUE(cmd_verify(ExperimentConfig::from_json(kRun), "nash").passed);
}

TEST(Verify, NashFailsOnTruthfulFirstPriceBids) {
    const auto r = cmd_verify(ExperimentConfig::from_json(with(kRun, {{"bids", "truthful"}})), "nash");
    EXPECT_FALSE(r.passed);
    EXPECT_GT(r.scalars["max_gain"].get<double>(), 1e-6);
}

TEST(Verify, TolerancesAreNotLoosenedSilently) {
    // An absurdly strict tolerance makes a correct suite fail.
    const auto strict = ExperimentConfig::from_json(
        with(kBayes, {{"verify", {{"tolerance", 1e-30}, {"step", 0.05}}}}));
    EXPECT_FALSE(cmd_verify(strict, "lemma1").passed);
    EXPECT_EQ(default_tolerance("ode"), 1e-6);
    EXPECT_THROW(default_tolerance("nope"), ConfigError);
}

TEST(Verify, SuiteConfigMismatch) {
    EXPECT_THROW(cmd_verify(ExperimentConfig::from_json(kBayes), "nash"), ConfigError);
    EXPECT_THROW(cmd_verify(ExperimentConfig::from_json(kRun), "ode"), ConfigError);
    EXPECT_THROW(cmd_verify(ExperimentConfig::from_json(kBayes), "lemma7"), ConfigError);
}

TEST(Simulate, NeedsSeed) {
    auto doc = kBayes;
    doc.erase("seed");
    EXPECT_THROW(cmd_simulate(ExperimentConfig::from_json(doc)), ConfigError);
}

TEST(Simulate, SingleSampleHasNoStandardError) {
    const auto r = cmd_simulate(ExperimentConfig::from_json(with(kBayes, {{"samples", 1}})));
    EXPECT_TRUE(r.scalars["difference_std_error"].is_null());
    const auto& t = table(r, "revenue");
    for (const auto& row : t.rows) EXPECT_EQ(row.back(), "NA");
}

TEST(Simulate, SameSeedGivesByteIdenticalFiles) {
    const auto config = ExperimentConfig::from_json(with(kBayes, {{"rounds_csv", true}}));
    const auto a = scratch("sim_a");
    const auto b = scratch("sim_b");
    cmd_simulate(config).write(a);
    cmd_simulate(config).write(b);
    std::size_t compared = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
        const auto name = entry.path().filename();
        EXPECT_EQ(slurp(entry.path()), slurp(b / name)) << name;
        ++compared;
    }
    EXPECT_EQ(compared, 3u);  // summary.json, revenue.csv, rounds.csv
    const auto other = cmd_simulate(ExperimentConfig::from_json(with(kBayes, {{"seed", 8}})));
    EXPECT_NE(other.scalars["first_price_mean"], cmd_simulate(config).scalars["first_price_mean"]);
}

TEST(Cli, ExitStatusReflectsOutcome) {
    if (!std::getenv("POSAUCTION_CLI")) GTEST_SKIP() << "POSAUCTION_CLI not set";
    const auto dir = scratch("cli");
    const auto run = write_config(dir, kRun);
    const auto out = (dir / "out").string();
    EXPECT_EQ(cli("run --config " + run.string() + " --out " + out), 0);
    EXPECT_EQ(cli("verify --suite nash --config " + run.string() + " --out " + out), 0);
    const auto truthful = dir / "truthful.json";
    std::ofstream(truthful) << with(kRun, {{"bids", "truthful"}}).dump();
    EXPECT_EQ(cli("verify --suite nash --config " + truthful.string() + " --out " + out), 1);

    const auto bayes = dir / "bayes.json";
    auto doc = kBayes;
    doc.erase("seed");
    std::ofstream(bayes) << doc.dump();
    EXPECT_EQ(cli("verify --suite ode --config " + bayes.string() + " --out " + out), 0);
    EXPECT_EQ(cli("simulate --config " + bayes.string() + " --out " + out), 2);
    EXPECT_EQ(cli("verify --suite bogus --config " + bayes.string() + " --out " + out), 2);
    EXPECT_NE(cli("frobnicate"), 0);
}

TEST(Cli, SeedOverrideIsDeterministic) {
    if (!std::getenv("POSAUCTION_CLI")) GTEST_SKIP() << "POSAUCTION_CLI not set";
    const auto dir = scratch("cli_seed");
    auto doc = kBayes;
    doc.erase("seed");
    const auto config = write_config(dir, doc);
    const std::string base = "simulate --config " + config.string() + " --seed 11 --samples 5000 --rounds";
    ASSERT_EQ(cli(base + " --out " + (dir / "a").string()), 0);
    ASSERT_EQ(cli(base + " --out " + (dir / "b").string()), 0);
    for (const char* name : {"summary.json", "revenue.csv", "rounds.csv"}) {
        const auto first = slurp(dir / "a" / name);
        EXPECT_FALSE(first.empty()) << name;
        EXPECT_EQ(first, slurp(dir / "b" / name)) << name;
    }
    const auto summary = json::parse(slurp(dir / "a" / "summary.json"));
    EXPECT_EQ(summary["results"]["seed"].get<std::uint64_t>(), 11u);
    EXPECT_FALSE(summary.contains("timestamp"));
}
