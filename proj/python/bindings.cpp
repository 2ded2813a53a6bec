#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "posauction/bayes.hpp"
#include "posauction/bid_table.hpp"
#include "posauction/complete_info.hpp"
#include "posauction/distributions.hpp"
#include "posauction/errors.hpp"
#include "posauction/experiment.hpp"
#include "posauction/simulation.hpp"

namespace py = pybind11;
using namespace posauction;

namespace {

using Rows = std::vector<std::vector<double>>;

MechanismSpec mechanism(const std::string& rule, const std::optional<std::vector<double>>& alphas) {
    MechanismSpec spec;
    spec.payment_rule = parse_payment_rule(rule);
    if (alphas) spec.scaling = ScalingVector(*alphas);
    return spec;
}

// Expressive rows, or one scalar per agent when alphas are given.
BidProfile bid_profile(const py::object& bids, const MechanismSpec& spec) {
    if (spec.expressive()) return ExpressiveBidProfile(bids.cast<Rows>());
    return SimplifiedBidProfile{bids.cast<std::vector<double>>(), *spec.scaling};
}

py::dict outcome_dict(const AuctionOutcome& out) {
    std::vector<std::optional<std::size_t>> holders;
    for (std::size_t j = 0; j < out.assignment.positions(); ++j) {
        holders.push_back(out.assignment.agent_at(j));
    }
    py::dict d;
    d["assignment"] = holders;
    d["payments"] = out.payments;
    d["utilities"] = out.utilities;
    return d;
}

py::object summary(const ResultRecord& record) {
    return py::module_::import("json").attr("loads")(record.summary().dump());
}

// pybind11 holders cannot be shared_ptr<const T>; the object is never mutated.
using DistHolder = std::shared_ptr<ValueDistribution>;

DistHolder holder(const DistributionPtr& d) { return std::const_pointer_cast<ValueDistribution>(d); }

py::dict estimate(const MeanEstimate& e) {
    py::dict d;
    d["mean"] = e.mean;
    d["std_error"] = e.std_error;
    return d;
}

}  // namespace

PYBIND11_MODULE(posauction, m) {
    m.doc() = "Position auctions: greedy allocation, first-price/GSP/VCG payments, "
              "complete-information and Bayes-Nash equilibrium bids. Agent and "
              "position indices are 0-based.";

    py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_ArithmeticError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    m.def(
        "run_auction",
        [](const py::object& bids, const std::vector<double>& values,
           const std::vector<double>& curve, const std::string& payment_rule,
           const std::optional<std::vector<double>>& alphas, const TieHint& tie_hint) {
            const auto spec = mechanism(payment_rule, alphas);
            return outcome_dict(run_auction(spec, bid_profile(bids, spec), SlotCurve(curve),
                                            ValueProfile(values), tie_hint));
        },
        py::arg("bids"), py::arg("values"), py::arg("curve"),
        py::arg("payment_rule") = "first-price", py::arg("alphas") = py::none(),
        py::arg("tie_hint") = TieHint{},
        "Greedy allocation plus payments. bids: n x k rows, or n scalars when alphas is set.");

    m.def(
        "truthful_vcg",
        [](const std::vector<double>& values, const std::vector<double>& curve) {
            const auto r = truthful_vcg(ValueProfile(values), SlotCurve(curve));
            py::dict d;
            d["ordering"] = r.ordering;
            d["payments"] = r.payments;
            d["utilities"] = r.utilities;
            return d;
        },
        py::arg("values"), py::arg("curve"));

    m.def(
        "construct_equilibrium_bids",
        [](const std::vector<double>& values, const std::vector<double>& curve) {
            const auto eq = construct_equilibrium_bids(ValueProfile(values), SlotCurve(curve));
            return py::make_tuple(eq.bids.to_rows(), eq.tie_hint);
        },
        py::arg("values"), py::arg("curve"),
        "Full-information equilibrium bids of the expressive first-price auction and "
        "the tie hint that resolves their exact ties.");

    m.def(
        "verify_nash",
        [](const py::object& bids, const std::vector<double>& values,
           const std::vector<double>& curve, const TieHint& tie_hint,
           const std::string& payment_rule, const std::optional<std::vector<double>>& alphas,
           double tolerance) {
            const auto spec = mechanism(payment_rule, alphas);
            const ValueProfile v(values);
            double vmax = 0.0;
            for (double x : values) vmax = std::max(vmax, x);
            const auto r = verify_nash(bid_profile(bids, spec), tie_hint, v, spec,
                                       SlotCurve(curve), DeviationGrid::standard(vmax), tolerance);
            py::dict d;
            d["is_equilibrium"] = r.is_equilibrium;
            d["max_gain"] = r.max_gain;
            d["efficient"] = r.efficiency_flag;
            d["payment_floor_ok"] = r.payment_floor_ok;
            if (r.worst_violation) {
                py::dict w;
                w["agent"] = r.worst_violation->agent;
                w["bids"] = r.worst_violation->bids;
                w["gain"] = r.worst_violation->gain;
                d["worst_violation"] = w;
            } else {
                d["worst_violation"] = py::none();
            }
            return d;
        },
        py::arg("bids"), py::arg("values"), py::arg("curve"), py::arg("tie_hint") = TieHint{},
        py::arg("payment_rule") = "first-price", py::arg("alphas") = py::none(),
        py::arg("tolerance") = 1e-6);

    py::class_<ValueDistribution, DistHolder>(m, "Distribution")
        .def("cdf", &ValueDistribution::cdf)
        .def("pdf", &ValueDistribution::pdf)
        .def("quantile", &ValueDistribution::quantile)
        .def_property_readonly("upper", &ValueDistribution::upper)
        .def_property_readonly("descriptor", &ValueDistribution::descriptor)
        .def("__repr__", [](const ValueDistribution& d) {
            return "Distribution('" + d.descriptor() + "')";
        });
    m.def(
        "make_distribution",
        [](const std::string& descriptor) { return holder(make_distribution(descriptor)); },
        py::arg("descriptor"),
        "uniform[:vbar], power:a[:vbar], truncexp:rate[:vbar] or empirical:<path>.");
    m.def(
        "z_function",
        [](unsigned mm, double v, const ValueDistribution& d) { return z_function(mm, v, d); },
        py::arg("m"), py::arg("v"), py::arg("distribution"));
    m.def(
        "alloc_prob",
        [](std::size_t position, std::size_t opponents, const std::vector<double>& x,
           const ValueDistribution& d) { return alloc_prob(position, opponents, x, d); },
        py::arg("position"), py::arg("opponents"), py::arg("x"), py::arg("distribution"));

    py::class_<BayesSetting>(m, "BayesSetting")
        .def(py::init([](std::size_t n, const std::vector<double>& curve,
                         const std::string& distribution, double abs_tol, double rel_tol,
                         unsigned max_depth) {
                 return BayesSetting(n, SlotCurve(curve), make_distribution(distribution),
                                     QuadratureConfig{abs_tol, rel_tol, max_depth});
             }),
             py::arg("n"), py::arg("curve"), py::arg("distribution") = "uniform",
             py::arg("abs_tol") = 1e-10, py::arg("rel_tol") = 1e-8, py::arg("max_depth") = 40)
        .def_property_readonly("n", &BayesSetting::n)
        .def_property_readonly("k", &BayesSetting::k)
        .def_property_readonly("distribution",
                               [](const BayesSetting& s) { return holder(s.dist_ptr()); })
        .def("bstar", [](const BayesSetting& s, double v) { return bstar(v, s); }, py::arg("v"))
        .def("bstar_integral",
             [](const BayesSetting& s, std::size_t j, double v) { return bstar_integral(j, v, s); },
             py::arg("j"), py::arg("v"))
        .def("bstar_binomial",
             [](const BayesSetting& s, std::size_t j, double v) { return bstar_binomial(j, v, s); },
             py::arg("j"), py::arg("v"))
        .def("bstar_derivative",
             [](const BayesSetting& s, std::size_t j, double v) {
                 return bstar_derivative(j, v, s);
             },
             py::arg("j"), py::arg("v"))
        .def("truthful_alloc_probs",
             [](const BayesSetting& s, double v) { return truthful_alloc_probs(v, s); },
             py::arg("v"))
        .def("expected_utility",
             [](const BayesSetting& s, const std::vector<double>& x, double v) {
                 return expected_utility(x, v, s);
             },
             py::arg("x"), py::arg("v"))
        .def("truthful_utility_integral",
             [](const BayesSetting& s, double v) { return truthful_utility_integral(v, s); },
             py::arg("v"))
        .def("myerson_expected_payment",
             [](const BayesSetting& s, double v) { return myerson_expected_payment(v, s); },
             py::arg("v"))
        .def("bstar_expected_payment",
             [](const BayesSetting& s, double v) { return bstar_expected_payment(v, s); },
             py::arg("v"))
        .def("check_lemma1",
             [](const BayesSetting& s, std::size_t j, double v, double h) {
                 return check_lemma1(j, v, s, h);
             },
             py::arg("j"), py::arg("v"), py::arg("h") = 1e-3)
        .def("check_lemma2",
             [](const BayesSetting& s, std::size_t j, const std::vector<double>& v_grid,
                const std::vector<double>& x_grid, double h) {
                 return check_lemma2(j, v_grid, x_grid, s, h);
             },
             py::arg("j"), py::arg("v_grid"), py::arg("x_grid"), py::arg("h") = 1e-3)
        .def("check_ode",
             [](const BayesSetting& s, std::size_t j, double v) { return check_ode(j, v, s); },
             py::arg("j"), py::arg("v"))
        .def("best_response_scan",
             [](const BayesSetting& s, double v, std::size_t grid_points) {
                 const auto r = best_response_scan(v, s, grid_points);
                 py::dict d;
                 d["max_gain"] = r.max_gain;
                 d["best_report"] = r.best_report;
                 d["stage_gains"] = r.stage_gains;
                 return d;
             },
             py::arg("v"), py::arg("grid_points") = 50);

    py::class_<EquilibriumBidTable>(m, "BidTable")
        .def_property_readonly("n", &EquilibriumBidTable::n)
        .def_property_readonly("k", &EquilibriumBidTable::k)
        .def_property_readonly("grid", &EquilibriumBidTable::grid)
        .def_property_readonly("rows", &EquilibriumBidTable::rows)
        .def_property_readonly("distribution", &EquilibriumBidTable::distribution)
        .def("evaluate", py::overload_cast<double>(&EquilibriumBidTable::evaluate, py::const_),
             py::arg("v"))
        .def("scaled", &EquilibriumBidTable::scaled, py::arg("factor"))
        .def("save", &EquilibriumBidTable::save, py::arg("path"))
        .def_static("load", &EquilibriumBidTable::load, py::arg("path"))
        .def("to_text",
             [](const EquilibriumBidTable& t) {
                 std::ostringstream out;
                 t.write(out);
                 return out.str();
             })
        .def_static("from_text", [](const std::string& text) {
            std::istringstream in(text);
            return EquilibriumBidTable::read(in);
        });

    m.def("tabulate_bstar", &tabulate_bstar, py::arg("setting"), py::arg("grid_points") = 512);

    m.def(
        "simulate_revenue",
        [](const BayesSetting& s, const EquilibriumBidTable& table, std::size_t samples,
           std::uint64_t seed, bool keep_rounds) {
            RevenueEstimate r;
            {
                py::gil_scoped_release release;
                r = simulate_revenue(s, table, samples, seed, keep_rounds);
            }
            py::dict d;
            d["samples"] = r.samples;
            d["first_price"] = estimate(r.first_price);
            d["vcg"] = estimate(r.vcg);
            d["difference"] = estimate(r.difference);
            if (keep_rounds) {
                py::list rounds;
                for (const auto& round : r.rounds) rounds.append(py::make_tuple(round.first_price, round.vcg));
                d["rounds"] = rounds;
            }
            return d;
        },
        py::arg("setting"), py::arg("table"), py::arg("samples"), py::arg("seed"),
        py::arg("keep_rounds") = false);

    m.def(
        "run_command",
        [](const std::string& command, const py::object& config, const std::string& suite,
           const std::optional<std::filesystem::path>& out) {
            const auto text = py::module_::import("json").attr("dumps")(config).cast<std::string>();
            const auto cfg = ExperimentConfig::from_json(nlohmann::json::parse(text));
            ResultRecord record;
            if (command == "run") {
                record = cmd_run(cfg);
            } else if (command == "tabulate") {
                record = cmd_tabulate(cfg);
            } else if (command == "verify") {
                record = cmd_verify(cfg, suite);
            } else if (command == "simulate") {
                record = cmd_simulate(cfg);
            } else {
                throw ConfigError("unknown command '" + command + "'");
            }
            if (out) record.write(*out);
            return summary(record);
        },
        py::arg("command"), py::arg("config"), py::arg("suite") = "", py::arg("out") = py::none(),
        "Runs a harness command on a config dict (same schema as the CLI's JSON) and "
        "returns the summary; writes the result files when `out` is given.");
}
