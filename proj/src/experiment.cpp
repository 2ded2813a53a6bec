#include "posauction/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "posauction/bid_table.hpp"
#include "posauction/complete_info.hpp"
#include "posauction/errors.hpp"
#include "posauction/format.hpp"
#include "posauction/parallel.hpp"
#include "posauction/simulation.hpp"

namespace posauction {

using nlohmann::json;

namespace {

void require_keys(const json& obj, std::string_view where,
                  std::initializer_list<std::string_view> allowed) {
    if (!obj.is_object()) throw ConfigError(std::string(where) + ": expected an object");
    for (const auto& [key, _] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
        }
    }
}

template <class T>
T get_as(const json& value, std::string_view what) {
    try {
        return value.get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string(what) + ": " + e.what());
    }
}

std::vector<double> number_list(const json& value, std::string_view what) {
    if (!value.is_array()) throw ConfigError(std::string(what) + ": expected a list of numbers");
    std::vector<double> out;
    for (const auto& x : value) {
        if (!x.is_number()) throw ConfigError(std::string(what) + ": expected numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

std::size_t positive_count(const json& value, std::string_view what) {
    if (!value.is_number_integer() || value.get<long long>() < 1) {
        throw ConfigError(std::string(what) + ": expected a positive integer");
    }
    return value.get<std::size_t>();
}

// null object members mean "unset", as written by to_json().
json drop_nulls(const json& value) {
    if (!value.is_object()) return value;
    json out = json::object();
    for (const auto& [key, item] : value.items()) {
        if (!item.is_null()) out[key] = drop_nulls(item);
    }
    return out;
}

std::string format_count(std::size_t x) { return std::to_string(x); }

json optional_number(const std::optional<double>& x) {
    return x ? json(*x) : json(nullptr);
}

std::string csv_number(const std::optional<double>& x) {
    return x ? format_double(*x) : "NA";
}

// Interior points vbar * i / (points + 1), i = 1..points.
std::vector<double> interior_grid(double upper, std::size_t points) {
    std::vector<double> grid(points);
    for (std::size_t i = 0; i < points; ++i) {
        grid[i] = upper * static_cast<double>(i + 1) / static_cast<double>(points + 1);
    }
    return grid;
}

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

ResultRecord start_record(const ExperimentConfig& config, std::string command) {
    ResultRecord record;
    record.command = std::move(command);
    record.config_digest = config.digest();
    return record;
}

const ValueProfile& require_values(const ExperimentConfig& config, std::string_view command) {
    if (!config.values) {
        throw ConfigError(std::string(command) + " needs explicit agent values");
    }
    return *config.values;
}

struct ResolvedBids {
    BidProfile bids;
    TieHint tie_hint;
};

ResolvedBids resolve_bids(const ExperimentConfig& config) {
    const ValueProfile& values = require_values(config, "bids");
    const MechanismSpec& spec = config.mechanism;
    const SlotCurve& curve = config.curve;
    const std::size_t n = values.n();
    const std::size_t k = curve.k();
    const json& b = config.bids;

    if (b.is_null()) throw ConfigError("bids: missing");
    if (b.is_string()) {
        const auto mode = b.get<std::string>();
        if (mode == "equilibrium") {
            if (!spec.expressive()) {
                throw ConfigError("bids: the equilibrium construction needs expressive bids");
            }
            auto eq = construct_equilibrium_bids(values, curve);
            return {std::move(eq.bids), std::move(eq.tie_hint)};
        }
        if (mode == "truthful") {
            if (spec.expressive()) {
                ExpressiveBidProfile bids(n, k);
                std::vector<double> row(k);
                for (std::size_t i = 0; i < n; ++i) {
                    for (std::size_t j = 0; j < k; ++j) row[j] = curve[j] * values[i];
                    bids.set_row(i, row);
                }
                return {std::move(bids), {}};
            }
            std::vector<double> scalars(values.values().begin(), values.values().end());
            return {SimplifiedBidProfile{std::move(scalars), *spec.scaling}, {}};
        }
        throw ConfigError("bids: unknown mode '" + mode + "'");
    }
    if (!b.is_array() || b.size() != n) {
        throw DimensionError("bids: expected one entry per agent (" + format_count(n) + ")");
    }
    if (spec.expressive()) {
        std::vector<std::vector<double>> rows;
        for (const auto& row : b) {
            auto parsed = number_list(row, "bids row");
            if (parsed.size() != k) {
                throw DimensionError("bids: each row needs one bid per position (" +
                                     format_count(k) + ")");
            }
            rows.push_back(std::move(parsed));
        }
        return {ExpressiveBidProfile(std::move(rows)), {}};
    }
    return {SimplifiedBidProfile{number_list(b, "bids"), *spec.scaling}, {}};
}

// Config tie hints are 1-based: {"1": 2} gives position 1 to agent 2.
TieHint merge_tie_hint(TieHint base, const json& hint, std::size_t n, std::size_t k) {
    if (hint.is_null()) return base;
    if (!hint.is_object()) throw ConfigError("tie_hint: expected an object");
    for (const auto& [key, value] : hint.items()) {
        std::size_t position = 0;
        try {
            position = std::stoul(key);
        } catch (const std::exception&) {
            throw ConfigError("tie_hint: positions must be integers");
        }
        const std::size_t agent = positive_count(value, "tie_hint agent");
        if (position < 1 || position > k || agent > n) {
            throw ConfigError("tie_hint: position or agent out of range");
        }
        base[position - 1] = agent - 1;
    }
    return base;
}

void add_outcome_table(ResultRecord& record, const AuctionOutcome& outcome,
                       const ValueProfile& values) {
    CsvTable table{"outcome", {"agent", "value", "position", "payment", "utility"}, {}};
    for (std::size_t i = 0; i < values.n(); ++i) {
        const auto pos = outcome.assignment.position_of(i);
        table.rows.push_back({format_count(i + 1), format_double(values[i]),
                              pos ? format_count(*pos + 1) : "",
                              format_double(outcome.payments[i]),
                              format_double(outcome.utilities[i])});
    }
    record.tables.push_back(std::move(table));
}

double suite_tolerance(const ExperimentConfig& config, std::string_view suite) {
    const double tol = config.verify.tolerance.value_or(default_tolerance(suite));
    if (!(tol >= 0.0)) throw ConfigError("verify.tolerance must be non-negative");
    return tol;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& raw) {
    const json doc = drop_nulls(raw);
    require_keys(doc, "config",
                 {"mechanism", "curve", "agents", "bids", "tie_hint", "quadrature", "grid",
                  "samples", "seed", "output", "rounds_csv", "verify"});
    ExperimentConfig c;

    if (!doc.contains("curve")) throw ConfigError("config: missing 'curve'");
    try {
        c.curve = SlotCurve(number_list(doc.at("curve"), "curve"));
    } catch (const DomainError& e) {
        throw ConfigError(std::string("curve: ") + e.what());
    } catch (const DimensionError& e) {
        throw ConfigError(std::string("curve: ") + e.what());
    }

    const json mech = doc.value("mechanism", json::object());
    require_keys(mech, "mechanism", {"payment_rule", "bid_space", "alphas"});
    try {
        c.mechanism.payment_rule =
            parse_payment_rule(get_as<std::string>(mech.value("payment_rule", json("first-price")),
                                                   "mechanism.payment_rule"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("mechanism.payment_rule: ") + e.what());
    }
    const auto space =
        get_as<std::string>(mech.value("bid_space", json("expressive")), "mechanism.bid_space");
    if (space == "simplified") {
        if (!mech.contains("alphas")) throw ConfigError("mechanism: simplified bids need 'alphas'");
        try {
            c.mechanism.scaling = ScalingVector(number_list(mech.at("alphas"), "alphas"));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("mechanism.alphas: ") + e.what());
        }
        if (c.mechanism.scaling->size() != c.curve.k()) {
            throw ConfigError("mechanism.alphas: one entry per position required");
        }
    } else if (space == "expressive") {
        if (mech.contains("alphas")) throw ConfigError("mechanism: alphas need simplified bids");
    } else {
        throw ConfigError("mechanism.bid_space: expected 'expressive' or 'simplified'");
    }

    if (!doc.contains("agents")) throw ConfigError("config: missing 'agents'");
    const json& agents = doc.at("agents");
    require_keys(agents, "agents", {"values", "n", "distribution"});
    const bool explicit_values = agents.contains("values");
    const bool distributional = agents.contains("n") || agents.contains("distribution");
    if (explicit_values == distributional) {
        throw ConfigError("agents: give either 'values' or both 'n' and 'distribution'");
    }
    if (explicit_values) {
        try {
            c.values = ValueProfile(number_list(agents.at("values"), "agents.values"));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("agents.values: ") + e.what());
        }
    } else {
        if (!agents.contains("n") || !agents.contains("distribution")) {
            throw ConfigError("agents: distributional setting needs 'n' and 'distribution'");
        }
        c.agents = positive_count(agents.at("n"), "agents.n");
        c.distribution = get_as<std::string>(agents.at("distribution"), "agents.distribution");
        make_distribution(*c.distribution);  // validate early
    }

    c.bids = doc.value("bids", json(nullptr));
    c.tie_hint = doc.value("tie_hint", json(nullptr));

    if (doc.contains("quadrature")) {
        const json& q = doc.at("quadrature");
        require_keys(q, "quadrature", {"abs_tol", "rel_tol", "max_depth"});
        c.quadrature.abs_tol = get_as<double>(q.value("abs_tol", json(c.quadrature.abs_tol)),
                                              "quadrature.abs_tol");
        c.quadrature.rel_tol = get_as<double>(q.value("rel_tol", json(c.quadrature.rel_tol)),
                                              "quadrature.rel_tol");
        c.quadrature.max_depth = get_as<unsigned>(
            q.value("max_depth", json(c.quadrature.max_depth)), "quadrature.max_depth");
        try {
            c.quadrature.validate();
        } catch (const std::exception& e) {
            throw ConfigError(std::string("quadrature: ") + e.what());
        }
    }
    if (doc.contains("grid")) c.grid = positive_count(doc.at("grid"), "grid");
    if (doc.contains("samples")) c.samples = positive_count(doc.at("samples"), "samples");
    if (doc.contains("seed")) {
        const json& seed = doc.at("seed");
        if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0)) {
            throw ConfigError("seed: expected a non-negative integer");
        }
        c.seed = seed.get<std::uint64_t>();
    }
    if (doc.contains("output")) c.output = get_as<std::string>(doc.at("output"), "output");
    if (doc.contains("rounds_csv")) c.rounds_csv = get_as<bool>(doc.at("rounds_csv"), "rounds_csv");

    if (doc.contains("verify")) {
        const json& v = doc.at("verify");
        require_keys(v, "verify",
                     {"tolerance", "step", "points", "max_opponents", "nash_grid_fraction"});
        if (v.contains("tolerance")) c.verify.tolerance = get_as<double>(v.at("tolerance"), "verify.tolerance");
        if (v.contains("step")) {
            c.verify.step = get_as<double>(v.at("step"), "verify.step");
            if (!(*c.verify.step > 0.0)) throw ConfigError("verify.step must be positive");
        }
        if (v.contains("points")) c.verify.points = positive_count(v.at("points"), "verify.points");
        if (v.contains("max_opponents")) {
            c.verify.max_opponents = positive_count(v.at("max_opponents"), "verify.max_opponents");
        }
        if (v.contains("nash_grid_fraction")) {
            c.verify.nash_grid_fraction =
                get_as<double>(v.at("nash_grid_fraction"), "verify.nash_grid_fraction");
            if (!(c.verify.nash_grid_fraction > 0.0)) {
                throw ConfigError("verify.nash_grid_fraction must be positive");
            }
        }
    }
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    json doc;
    try {
        doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ConfigError("malformed config " + path.string() + ": " + e.what());
    }
    return from_json(doc);
}

json ExperimentConfig::to_json() const {
    json doc;
    json mech{{"payment_rule", std::string(to_string(mechanism.payment_rule))}};
    if (mechanism.scaling) {
        mech["bid_space"] = "simplified";
        mech["alphas"] = std::vector<double>(mechanism.scaling->entries().begin(),
                                             mechanism.scaling->entries().end());
    } else {
        mech["bid_space"] = "expressive";
    }
    doc["mechanism"] = mech;
    doc["curve"] = std::vector<double>(curve.entries().begin(), curve.entries().end());
    if (values) {
        doc["agents"] = {{"values", std::vector<double>(values->values().begin(),
                                                        values->values().end())}};
    } else {
        doc["agents"] = {{"n", *agents}, {"distribution", *distribution}};
    }
    doc["bids"] = bids;
    doc["tie_hint"] = tie_hint;
    doc["quadrature"] = {{"abs_tol", quadrature.abs_tol},
                         {"rel_tol", quadrature.rel_tol},
                         {"max_depth", quadrature.max_depth}};
    doc["grid"] = grid;
    doc["samples"] = samples;
    doc["seed"] = seed ? json(*seed) : json(nullptr);
    doc["output"] = output.string();
    doc["rounds_csv"] = rounds_csv;
    json v{{"max_opponents", verify.max_opponents},
           {"nash_grid_fraction", verify.nash_grid_fraction}};
    v["tolerance"] = optional_number(verify.tolerance);
    v["step"] = optional_number(verify.step);
    v["points"] = verify.points ? json(*verify.points) : json(nullptr);
    doc["verify"] = v;
    return doc;
}

std::string ExperimentConfig::digest() const {
    json doc = to_json();
    doc.erase("output");  // where results go does not change them
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a(doc.dump())));
    return buf;
}

BayesSetting ExperimentConfig::bayes_setting() const {
    if (!agents || !distribution) {
        throw ConfigError("this command needs a distributional setting (agents.n, agents.distribution)");
    }
    if (*agents < curve.k() + 1) {
        throw DomainError("distributional setting needs n >= k + 1");
    }
    return BayesSetting(*agents, curve, make_distribution(*distribution), quadrature);
}

// ---------------------------------------------------------------------------
// results

std::string CsvTable::render() const {
    std::ostringstream out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t c = 0; c < cells.size(); ++c) out << (c ? "," : "") << cells[c];
        out << '\n';
    };
    line(header);
    for (const auto& row : rows) line(row);
    return out.str();
}

json ResultRecord::summary() const {
    json doc{{"command", command},
             {"config_digest", config_digest},
             {"passed", passed},
             {"results", scalars}};
    json names = json::array();
    for (const auto& t : tables) names.push_back(t.name + ".csv");
    for (const auto& [name, _] : files) names.push_back(name);
    doc["files"] = names;
    if (timestamp) doc["timestamp"] = *timestamp;
    return doc;
}

void ResultRecord::write(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    auto put = [&](const std::string& name, const std::string& content) {
        std::ofstream out(dir / name, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
        out << content;
    };
    put("summary.json", summary().dump(2) + "\n");
    for (const auto& t : tables) put(t.name + ".csv", t.render());
    for (const auto& [name, content] : files) put(name, content);
}

double default_tolerance(std::string_view suite) {
    if (suite == "nash") return 1e-6;
    if (suite == "lemma1") return 1e-4;
    if (suite == "lemma2") return 1e-4;
    if (suite == "ode") return 1e-6;
    if (suite == "aux") return 1e-6;
    if (suite == "monotone") return 1e-9;
    if (suite == "payment-identity") return 1e-7;
    throw ConfigError("unknown suite '" + std::string(suite) + "'");
}

// ---------------------------------------------------------------------------
// commands

ResultRecord cmd_run(const ExperimentConfig& config) {
    ResultRecord record = start_record(config, "run");
    const ValueProfile& values = require_values(config, "run");
    auto resolved = resolve_bids(config);
    resolved.tie_hint = merge_tie_hint(std::move(resolved.tie_hint), config.tie_hint,
                                       values.n(), config.curve.k());

    const AuctionOutcome outcome =
        run_auction(config.mechanism, resolved.bids, config.curve, values, resolved.tie_hint);
    add_outcome_table(record, outcome, values);

    double revenue = 0.0;
    for (double p : outcome.payments) revenue += p;
    record.scalars["revenue"] = revenue;
    record.scalars["welfare"] = welfare(outcome.assignment, config.curve, values);
    record.scalars["efficient"] = is_efficient(outcome.assignment, config.curve, values);
    record.scalars["payment_rule"] = std::string(to_string(config.mechanism.payment_rule));
    return record;
}

ResultRecord cmd_tabulate(const ExperimentConfig& config) {
    ResultRecord record = start_record(config, "tabulate");
    const BayesSetting s = config.bayes_setting();
    const EquilibriumBidTable table = tabulate_bstar(s, config.grid);

    std::ostringstream out;
    table.write(out);
    record.files["bid_table.txt"] = out.str();

    bool monotone = true;
    bool cone = true;
    for (std::size_t g = 0; g < table.size(); ++g) {
        const auto& row = table.rows()[g];
        for (std::size_t j = 0; j < table.k(); ++j) {
            if (g > 0 && row[j] < table.rows()[g - 1][j]) monotone = false;
            if (j + 1 < table.k() && row[j] < row[j + 1]) cone = false;
        }
    }
    record.scalars["grid_points"] = table.size();
    record.scalars["monotone"] = monotone;
    record.scalars["cone"] = cone;
    record.passed = monotone && cone;
    return record;
}

ResultRecord cmd_verify(const ExperimentConfig& config, std::string_view suite) {
    const double tol = suite_tolerance(config, suite);
    ResultRecord record = start_record(config, "verify " + std::string(suite));
    record.scalars["suite"] = std::string(suite);
    record.scalars["tolerance"] = tol;
    const std::string table_name = "residuals_" + std::string(suite);

    if (suite == "nash") {
        const ValueProfile& values = require_values(config, "verify nash");
        auto resolved = resolve_bids(config);
        resolved.tie_hint = merge_tie_hint(std::move(resolved.tie_hint), config.tie_hint,
                                           values.n(), config.curve.k());
        double v_max = 0.0;
        for (double v : values.values()) v_max = std::max(v_max, v);
        DeviationGrid grid = DeviationGrid::standard(v_max);
        grid.step = config.verify.nash_grid_fraction * (v_max > 0.0 ? v_max : 1.0);

        const NashReport report = verify_nash(resolved.bids, resolved.tie_hint, values,
                                              config.mechanism, config.curve, grid, tol);
        std::vector<std::string> header{"agent", "gain"};
        for (std::size_t j = 0; j < config.curve.k(); ++j) {
            header.push_back("bid_" + format_count(j + 1));
        }
        CsvTable table{table_name, header, {}};
        if (report.worst_violation) {
            const Deviation& d = *report.worst_violation;
            std::vector<std::string> row{format_count(d.agent + 1), format_double(d.gain)};
            for (double b : d.bids) row.push_back(format_double(b));
            table.rows.push_back(std::move(row));
        }
        record.tables.push_back(std::move(table));
        record.scalars["max_gain"] = report.max_gain;
        record.scalars["efficient"] = report.efficiency_flag;
        record.scalars["payment_floor_ok"] = report.payment_floor_ok;
        record.passed = report.is_equilibrium;
        return record;
    }

    const BayesSetting s = config.bayes_setting();
    const std::size_t k = s.k();
    const double upper = s.upper();

    if (suite == "lemma1" || suite == "ode") {
        const bool lemma = suite == "lemma1";
        const double h = config.verify.step.value_or(1e-3 * upper);
        const auto grid = interior_grid(upper, config.verify.points.value_or(lemma ? 10 : 20));
        std::vector<double> residual(k * grid.size());
        parallel_for(residual.size(), [&](std::size_t idx) {
            const std::size_t j = idx / grid.size();
            const double v = grid[idx % grid.size()];
            residual[idx] = lemma ? check_lemma1(j, v, s, h) : check_ode(j, v, s);
        });
        CsvTable table{table_name, {"position", "v", "residual"}, {}};
        double worst = 0.0;
        for (std::size_t idx = 0; idx < residual.size(); ++idx) {
            table.rows.push_back({format_count(idx / grid.size() + 1),
                                  format_double(grid[idx % grid.size()]),
                                  format_double(residual[idx])});
            worst = std::max(worst, residual[idx]);
        }
        record.tables.push_back(std::move(table));
        record.scalars["max_residual"] = worst;
        record.passed = worst <= tol;
        return record;
    }

    if (suite == "lemma2") {
        const double h = config.verify.step.value_or(1e-3 * upper);
        const auto grid = interior_grid(upper, config.verify.points.value_or(10));
        std::vector<double> minimum(k);
        parallel_for(k, [&](std::size_t j) { minimum[j] = check_lemma2(j, grid, grid, s, h); });
        CsvTable table{table_name, {"position", "min_cross_difference"}, {}};
        double worst = minimum.empty() ? 0.0 : minimum.front();
        for (std::size_t j = 0; j < k; ++j) {
            table.rows.push_back({format_count(j + 1), format_double(minimum[j])});
            worst = std::min(worst, minimum[j]);
        }
        record.tables.push_back(std::move(table));
        record.scalars["min_cross_difference"] = worst;
        record.passed = worst >= -tol;
        return record;
    }

    if (suite == "aux") {
        const double h = config.verify.step.value_or(1e-4 * upper);
        const auto grid = interior_grid(upper, config.verify.points.value_or(9));
        const std::size_t max_m = config.verify.max_opponents;
        struct Case {
            std::size_t j, m;
            std::optional<std::size_t> lower;
            double v;
        };
        std::vector<Case> cases;
        for (std::size_t m = 1; m <= max_m; ++m) {
            for (std::size_t j = 0; j + 2 <= m; ++j) {
                for (double v : grid) cases.push_back({j, m, std::nullopt, v});
                for (std::size_t l = j + 2; l + 1 <= m; ++l) {
                    for (double v : grid) cases.push_back({j, m, l, v});
                }
            }
        }
        std::vector<double> residual(cases.size());
        parallel_for(cases.size(), [&](std::size_t idx) {
            const Case& c = cases[idx];
            const std::vector<double> x(c.m + 1, c.v);
            residual[idx] = check_auxiliary_lemmas(c.j, c.m, c.lower, x, s.dist(), h);
        });
        CsvTable table{table_name, {"identity", "position", "lower", "opponents", "v", "residual"}, {}};
        double worst = 0.0;
        for (std::size_t idx = 0; idx < cases.size(); ++idx) {
            const Case& c = cases[idx];
            table.rows.push_back({c.lower ? "lower" : "pair", format_count(c.j + 1),
                                  c.lower ? format_count(*c.lower + 1) : "",
                                  format_count(c.m), format_double(c.v),
                                  format_double(residual[idx])});
            worst = std::max(worst, residual[idx]);
        }
        record.tables.push_back(std::move(table));
        record.scalars["cases"] = cases.size();
        record.scalars["max_residual"] = worst;
        record.passed = worst <= tol;
        return record;
    }

    if (suite == "monotone") {
        const std::size_t points = config.verify.points.value_or(50);
        std::vector<double> grid(points + 1);
        for (std::size_t g = 0; g <= points; ++g) {
            grid[g] = upper * static_cast<double>(g) / static_cast<double>(points);
        }
        std::vector<std::vector<double>> bids(grid.size());
        std::vector<double> allocation(grid.size());
        parallel_for(grid.size(), [&](std::size_t g) {
            bids[g] = bstar(grid[g], s);
            const auto probs = truthful_alloc_probs(grid[g], s);
            double a = 0.0;
            for (std::size_t j = 0; j < k; ++j) a += s.curve()[j] * probs[j];
            allocation[g] = a;
        });
        std::vector<std::string> header{"v", "expected_allocation"};
        for (std::size_t j = 0; j < k; ++j) header.push_back("b_" + format_count(j + 1));
        CsvTable table{table_name, header, {}};
        double bid_drop = 0.0, cone_gap = 0.0, alloc_drop = 0.0;
        for (std::size_t g = 0; g < grid.size(); ++g) {
            std::vector<std::string> row{format_double(grid[g]), format_double(allocation[g])};
            for (std::size_t j = 0; j < k; ++j) {
                row.push_back(format_double(bids[g][j]));
                if (g > 0) bid_drop = std::max(bid_drop, bids[g - 1][j] - bids[g][j]);
                if (j + 1 < k) cone_gap = std::max(cone_gap, bids[g][j + 1] - bids[g][j]);
            }
            if (g > 0) alloc_drop = std::max(alloc_drop, allocation[g - 1] - allocation[g]);
            table.rows.push_back(std::move(row));
        }
        record.tables.push_back(std::move(table));
        record.scalars["max_bid_decrease"] = bid_drop;
        record.scalars["max_cone_violation"] = cone_gap;
        record.scalars["max_allocation_decrease"] = alloc_drop;
        record.passed = bid_drop <= tol && cone_gap <= tol && alloc_drop <= tol;
        return record;
    }

    if (suite == "payment-identity") {
        const auto grid = interior_grid(upper, config.verify.points.value_or(20));
        std::vector<double> first(grid.size()), myerson(grid.size());
        parallel_for(grid.size(), [&](std::size_t g) {
            first[g] = bstar_expected_payment(grid[g], s);
            myerson[g] = myerson_expected_payment(grid[g], s);
        });
        CsvTable table{table_name, {"v", "bstar_payment", "myerson_payment", "residual"}, {}};
        double worst = 0.0;
        for (std::size_t g = 0; g < grid.size(); ++g) {
            const double r = std::abs(first[g] - myerson[g]);
            table.rows.push_back({format_double(grid[g]), format_double(first[g]),
                                  format_double(myerson[g]), format_double(r)});
            worst = std::max(worst, r);
        }
        record.tables.push_back(std::move(table));
        record.scalars["max_residual"] = worst;
        record.passed = worst <= tol;
        return record;
    }

    throw ConfigError("unknown suite '" + std::string(suite) + "'");
}

ResultRecord cmd_simulate(const ExperimentConfig& config) {
    if (!config.seed) throw ConfigError("simulate needs a seed");
    ResultRecord record = start_record(config, "simulate");
    const BayesSetting s = config.bayes_setting();
    const EquilibriumBidTable table = tabulate_bstar(s, config.grid);
    const RevenueEstimate est =
        simulate_revenue(s, table, config.samples, *config.seed, config.rounds_csv);

    CsvTable summary{"revenue", {"quantity", "mean", "std_error"}, {}};
    auto add = [&](const char* name, const MeanEstimate& m) {
        summary.rows.push_back({name, format_double(m.mean), csv_number(m.std_error)});
        record.scalars[std::string(name) + "_mean"] = m.mean;
        record.scalars[std::string(name) + "_std_error"] = optional_number(m.std_error);
    };
    add("first_price", est.first_price);
    add("vcg", est.vcg);
    add("difference", est.difference);
    record.tables.push_back(std::move(summary));

    record.scalars["samples"] = est.samples;
    record.scalars["seed"] = *config.seed;
    if (est.difference.std_error) {
        record.scalars["within_3_std_errors"] =
            std::abs(est.difference.mean) <= 3.0 * *est.difference.std_error;
    } else {
        record.scalars["within_3_std_errors"] = nullptr;
    }

    if (config.rounds_csv) {
        CsvTable rounds{"rounds", {"round", "first_price", "vcg", "difference"}, {}};
        rounds.rows.reserve(est.rounds.size());
        for (std::size_t r = 0; r < est.rounds.size(); ++r) {
            const auto& x = est.rounds[r];
            rounds.rows.push_back({format_count(r + 1), format_double(x.first_price),
                                   format_double(x.vcg), format_double(x.first_price - x.vcg)});
        }
        record.tables.push_back(std::move(rounds));
    }
    return record;
}

}  // namespace posauction
