/**
 * @file cli.cpp
 * @brief price / hedge / shortfall / convergence commands
 */

#include "gamehedge/cli.hpp"
#include "gamehedge/dynkin.hpp"
#include "gamehedge/hedging.hpp"
#include "gamehedge/path_tree.hpp"
#include "gamehedge/shortfall.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace gamehedge::cli {

using nlohmann::json;

namespace {

template <typename T>
T field(const json& obj, const char* key, const char* section) {
    if (!obj.contains(key)) {
        throw ConfigError(std::string("Missing field ") + section + "." + key);
    }
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("Field ") + section + "." + key + " has the wrong type");
    }
}

template <typename T>
T field_or(const json& obj, const char* key, const char* section, T fallback) {
    return obj.contains(key) ? field<T>(obj, key, section) : fallback;
}

const json& section(const json& doc, const char* name, bool required) {
    static const json empty = json::object();
    if (!doc.contains(name)) {
        if (required) throw ConfigError(std::string("Missing section ") + name);
        return empty;
    }
    if (!doc.at(name).is_object()) throw ConfigError(std::string("Section ") + name + " must be an object");
    return doc.at(name);
}

std::size_t positive_size(const json& obj, const char* key, const char* sect, std::size_t fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number_integer() || v.get<long long>() <= 0) {
        throw ConfigError(std::string("Field ") + sect + "." + key + " must be a positive integer");
    }
    return v.get<std::size_t>();
}

std::string format_double(double x) {
    std::ostringstream s;
    s << std::setprecision(17) << x;
    return s.str();
}

void emit(std::ostream& out, const std::filesystem::path* dir, const std::string& name,
          const std::string& text) {
    out << text;
    if (dir) {
        std::ofstream file(*dir / name, std::ios::binary);
        if (!file) throw std::runtime_error("Cannot write " + (*dir / name).string());
        file << text;
    }
}

struct Options {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::size_t threads = 0;
    bool threads_given = false;
    bool verify = false;
};

RunConfig resolve(const Options& opt) {
    auto config = load_config(opt.config_path);
    if (const char* env = std::getenv("GAMEHEDGE_SEED"); env && *env) {
        try {
            config.seed = std::stoull(env);
        } catch (const std::exception&) {
            throw ConfigError("GAMEHEDGE_SEED is not an unsigned integer");
        }
    }
    if (const char* env = std::getenv("GAMEHEDGE_THREADS"); env && *env) {
        try {
            config.threads = std::stoull(env);
        } catch (const std::exception&) {
            throw ConfigError("GAMEHEDGE_THREADS is not an unsigned integer");
        }
    }
    if (opt.seed_given) config.seed = opt.seed;
    if (opt.threads_given) config.threads = opt.threads;
    if (config.threads == 0) throw ConfigError("Thread count must be positive");
    return config;
}

int cmd_price(const RunConfig& config, bool verify, std::ostream& out,
              const std::filesystem::path* dir) {
    const auto spec = config.payoff();
    const auto step = make_step_model(config.market, config.steps);
    const auto lat = build_stock_lattice(step, config.market);
    const auto payoffs = payoff_lattices(spec, lat, step);
    const auto value = game_value(payoffs, step);
    const auto rules = rational_stopping(value, payoffs, kStoppingTolerance * config.market.spot);
    const auto american = american_value(payoffs.holder, step);

    bool sandwich = true;
    std::size_t cancel_nodes = 0;
    std::size_t exercise_nodes = 0;
    for (std::size_t k = 0; k <= step.steps; ++k) {
        for (std::size_t j = 0; j <= k; ++j) {
            const double v = value(k, j);
            if (k < step.steps) {
                sandwich = sandwich && payoffs.holder(k, j) <= v && v <= payoffs.canceller(k, j);
                if (rules.canceller.stops_at(k, j)) ++cancel_nodes;
            } else {
                sandwich = sandwich && v == payoffs.holder(k, j);
            }
            if (rules.holder.stops_at(k, j)) ++exercise_nodes;
        }
    }

    json report;
    report["command"] = "price";
    report["config"] = config_to_json(config);
    report["steps"] = step.steps;
    report["price"] = value(0, 0);
    report["holder_payoff_root"] = payoffs.holder(0, 0);
    report["canceller_payoff_root"] = payoffs.canceller(0, 0);
    report["american_price"] = american(0, 0);
    report["up_probability"] = step.up_probability;
    report["sandwich_ok"] = sandwich;
    report["cancel_at_root"] = rules.canceller.stops_at(0, 0);
    report["cancel_nodes_before_maturity"] = cancel_nodes;
    report["exercise_nodes"] = exercise_nodes;

    bool ok = sandwich;
    if (verify) {
        json v;
        if (step.steps <= kMaxEnumerationSteps) {
            const auto brute = brute_force_value(payoffs, step);
            v["method"] = "rule_enumeration";
            v["rule_count"] = brute.rule_count;
            v["min_max"] = brute.upper;
            v["max_min"] = brute.lower;
            v["saddle"] = brute.saddle(1e-12 * config.market.spot);
            v["abs_error"] = std::abs(brute.value() - value(0, 0));
            v["ok"] = brute.saddle(1e-12 * config.market.spot) &&
                      std::abs(brute.value() - value(0, 0)) <= 1e-12 * config.market.spot;
        } else if (step.steps <= kMaxPathTreeSteps) {
            const auto tree = path_tree_game_value(payoffs, step);
            v["method"] = "path_tree";
            v["abs_error"] = std::abs(tree[0] - value(0, 0));
            v["ok"] = std::abs(tree[0] - value(0, 0)) <= 1e-12 * config.market.spot;
        } else {
            v["method"] = "none";
            v["note"] = "oracles need at most 20 steps";
            v["ok"] = true;
        }
        ok = ok && v["ok"].get<bool>();
        report["verify"] = v;
    }

    emit(out, dir, "price.json", report.dump(2) + "\n");
    return ok ? kExitOk : kExitAuditFailed;
}

int cmd_hedge(const RunConfig& config, bool verify, std::ostream& out,
              const std::filesystem::path* dir) {
    const auto spec = config.payoff();
    const auto game = solve_game(spec, config.market, config.steps);
    const double z = config.market.spot;
    const auto audit = audit_hedge(game.doob, game.plan, game.lattice, game.step, spec.lipschitz);
    const auto superhedge =
        verify_superhedge(game.plan, game.doob, game.payoffs, game.rules.canceller, 1e-12 * z);

    const double tol = 1e-12;
    const bool residuals_ok = audit.representation_relative <= tol &&
                              audit.self_financing_relative <= tol &&
                              audit.martingale_relative <= tol &&
                              audit.predictability_relative <= tol;
    const bool gamma_ok = audit.max_abs_gamma <= 2.0 * spec.lipschitz;
    const bool alpha_ok = audit.max_alpha_ratio <= 2.0;
    const bool capital_ok = std::abs(audit.initial_capital - game.value(0, 0)) <= tol * z;

    json report;
    report["command"] = "hedge";
    report["config"] = config_to_json(config);
    report["steps"] = game.step.steps;
    report["price"] = game.value(0, 0);
    report["initial_capital"] = audit.initial_capital;
    report["max_abs_gamma"] = audit.max_abs_gamma;
    report["gamma_bound"] = 2.0 * spec.lipschitz;
    report["gamma_bound_ok"] = gamma_ok;
    report["max_alpha_ratio"] = audit.max_alpha_ratio;
    report["alpha_bound_ok"] = alpha_ok;
    report["residuals_relative"] = {
        {"representation", audit.representation_relative},
        {"self_financing", audit.self_financing_relative},
        {"martingale", audit.martingale_relative},
        {"predictability", audit.predictability_relative},
    };
    report["residuals_ok"] = residuals_ok;
    report["doob"] = {{"compensator_initial", 0.0},
                      {"min_compensator_step", audit.min_compensator_step},
                      {"nondecreasing", audit.min_compensator_step >= -tol * z}};
    report["superhedge"] = {{"worst_margin", superhedge.worst_margin},
                            {"worst_step", superhedge.worst_step},
                            {"worst_node", superhedge.worst_node},
                            {"dominated", superhedge.dominated}};
    report["initial_capital_matches_price"] = capital_ok;

    bool ok = residuals_ok && gamma_ok && alpha_ok && capital_ok && superhedge.dominated;
    if (verify) {
        json v;
        const auto n = game.step.steps;
        if (n <= kMaxEnumerationSteps) {
            const double margin = exhaustive_superhedge_margin(game.plan, game.payoffs,
                                                               game.rules.canceller, game.step,
                                                               game.lattice);
            v["method"] = "rule_enumeration";
            v["exhaustive_margin"] = margin;
            v["ok"] = margin >= -tol * z;
        } else if (n <= kMaxPathTreeSteps) {
            const auto rule = PathRule::from_lattice(game.rules.canceller);
            const auto tree_u = path_tree_envelope(rule, game.payoffs, game.step);
            const auto tree = path_tree_doob(tree_u, game.step);
            double worst = 0.0;
            for (std::uint32_t path = 0; path < path_tree::path_count(n); ++path) {
                const auto m = game.doob.martingale_along(path_tree::path_moves(path, n));
                for (std::size_t k = 0; k <= n; ++k) {
                    const auto id = path_tree::node_id(k, path_tree::prefix_of(path, k));
                    worst = std::max(worst, std::abs(m[k] - tree.martingale[id]));
                }
            }
            v["method"] = "path_tree";
            v["martingale_abs_error"] = worst;
            v["ok"] = worst <= tol * z;
        } else {
            v["method"] = "none";
            v["note"] = "oracles need at most 20 steps";
            v["ok"] = true;
        }
        ok = ok && v["ok"].get<bool>();
        report["verify"] = v;
    }
    emit(out, dir, "hedge.json", report.dump(2) + "\n");
    return ok ? kExitOk : kExitAuditFailed;
}

int cmd_shortfall(const RunConfig& config, std::ostream& out, const std::filesystem::path* dir) {
    if (config.steps_list.size() < 3) throw ConfigError("shortfall needs at least 3 step counts");
    ShortfallConfig mc;
    mc.steps = config.steps_list;
    mc.paths = config.paths;
    mc.grid = config.grid;
    mc.seed = config.seed;
    mc.threads = config.threads;
    mc.horizon_cap = config.horizon_cap;
    mc.with_gap = config.with_gap;
    const auto report = estimate_mean_shortfall(config.payoff(), config.market, mc);

    std::ostringstream csv;
    write_shortfall_csv(csv, report);
    emit(out, dir, "shortfall.csv", csv.str());

    if (dir) {
        json summary;
        summary["command"] = "shortfall";
        summary["config"] = config_to_json(config);
        summary["slope_fit"] = report.slope_fit;
        summary["c_fit"] = report.c_fit;
        json rows = json::array();
        for (const auto& row : report.rows) {
            json r{{"n", row.steps},
                   {"price", row.price},
                   {"mean_psi", row.mean_psi},
                   {"se_psi", row.se_psi},
                   {"c_fit", row.c_fit},
                   {"truncated_paths", row.truncated_paths},
                   {"coarse_grid", row.coarse_grid}};
            json gaps = json::array();
            for (std::size_t i = 0; i < row.gap.mean.size(); ++i) {
                gaps.push_back({{"rule", row.gap.labels[i]},
                                {"mean", row.gap.mean[i]},
                                {"se", row.gap.standard_error[i]}});
            }
            r["gaps"] = gaps;
            rows.push_back(r);
        }
        summary["rows"] = rows;
        std::ofstream file(*dir / "shortfall.json", std::ios::binary);
        if (!file) throw std::runtime_error("Cannot write " + (*dir / "shortfall.json").string());
        file << summary.dump(2) << "\n";
    }
    return kExitOk;
}

int cmd_convergence(const RunConfig& config, std::ostream& out, const std::filesystem::path* dir) {
    if (config.steps_list.size() < 3) throw ConfigError("convergence needs at least 3 step counts");
    const auto spec = config.payoff();
    std::vector<double> prices;
    for (std::size_t n : config.steps_list) {
        const auto step = make_step_model(config.market, n);
        const auto lat = build_stock_lattice(step, config.market);
        prices.push_back(game_value(payoff_lattices(spec, lat, step), step)(0, 0));
    }
    std::ostringstream csv;
    csv << "n,price,diff_to_next,ratio\n";
    for (std::size_t i = 0; i < prices.size(); ++i) {
        csv << config.steps_list[i] << ',' << format_double(prices[i]) << ',';
        if (i + 1 < prices.size()) csv << format_double(prices[i + 1] - prices[i]);
        csv << ',';
        if (i + 2 < prices.size()) {
            const double next = prices[i + 2] - prices[i + 1];
            if (next != 0.0) csv << format_double((prices[i + 1] - prices[i]) / next);
        }
        csv << '\n';
    }
    emit(out, dir, "convergence.csv", csv.str());
    return kExitOk;
}

void print_error(std::ostream& out, const std::string& message, int code) {
    json e{{"error", message}, {"exit_code", code}};
    out << e.dump() << "\n";
}

}  // namespace

GamePayoffSpec RunConfig::payoff() const {
    if (payoff_type == "put") return game_put(strike, penalty);
    if (payoff_type == "call") return game_call(strike, penalty);
    throw ConfigError("Unknown payoff type " + payoff_type);
}

RunConfig parse_config(const json& doc) {
    if (!doc.is_object()) throw ConfigError("Configuration must be a JSON object");
    RunConfig c;
    const auto& market = section(doc, "market", true);
    c.market.rate = field<double>(market, "rate", "market");
    c.market.volatility = field<double>(market, "volatility", "market");
    c.market.maturity = field<double>(market, "maturity", "market");
    c.market.spot = field<double>(market, "spot", "market");
    try {
        c.market.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    const auto& payoff = section(doc, "payoff", true);
    c.payoff_type = field<std::string>(payoff, "type", "payoff");
    c.strike = field<double>(payoff, "strike", "payoff");
    c.penalty = field_or<double>(payoff, "penalty", "payoff", 0.0);
    try {
        (void)c.payoff();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    const auto& lattice = section(doc, "lattice", false);
    c.steps = positive_size(lattice, "steps", "lattice", c.steps);
    if (lattice.contains("steps_list")) {
        const auto& list = lattice.at("steps_list");
        if (!list.is_array() || list.empty()) {
            throw ConfigError("Field lattice.steps_list must be a non-empty array");
        }
        c.steps_list.clear();
        for (const auto& v : list) {
            if (!v.is_number_integer() || v.get<long long>() <= 0) {
                throw ConfigError("Field lattice.steps_list must hold positive integers");
            }
            c.steps_list.push_back(v.get<std::size_t>());
        }
    }
    for (std::size_t i = 1; i < c.steps_list.size(); ++i) {
        if (c.steps_list[i] <= c.steps_list[i - 1]) {
            throw ConfigError("Field lattice.steps_list must be sorted ascending and distinct");
        }
    }

    const auto& mc = section(doc, "mc", false);
    c.paths = positive_size(mc, "paths", "mc", c.paths);
    if (c.paths < 100) throw ConfigError("Field mc.paths must be at least 100");
    c.grid = positive_size(mc, "grid", "mc", 64 * c.steps_list.back());
    if (mc.contains("seed")) {
        const auto& v = mc.at("seed");
        if (!v.is_number_unsigned()) throw ConfigError("Field mc.seed must be an unsigned integer");
        c.seed = v.get<std::uint64_t>();
    }
    c.horizon_cap = field_or<double>(mc, "horizon_cap", "mc", c.horizon_cap);
    if (!(c.horizon_cap >= 1.0) || !std::isfinite(c.horizon_cap)) {
        throw ConfigError("Field mc.horizon_cap must be at least 1");
    }
    c.with_gap = field_or<bool>(mc, "with_gap", "mc", c.with_gap);
    c.threads = positive_size(doc, "threads", "", c.threads);
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("Cannot open config " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("Malformed config JSON: ") + e.what());
    }
    return parse_config(doc);
}

json config_to_json(const RunConfig& c) {
    return json{
        {"market",
         {{"rate", c.market.rate},
          {"volatility", c.market.volatility},
          {"maturity", c.market.maturity},
          {"spot", c.market.spot}}},
        {"payoff", {{"type", c.payoff_type}, {"strike", c.strike}, {"penalty", c.penalty}}},
        {"lattice", {{"steps", c.steps}, {"steps_list", c.steps_list}}},
        {"mc",
         {{"paths", c.paths},
          {"grid", c.grid},
          {"seed", c.seed},
          {"horizon_cap", c.horizon_cap},
          {"with_gap", c.with_gap}}},
    };
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Game option pricing, hedging and shortfall experiments on the CRR lattice",
                 "gamehedge"};
    app.require_subcommand(1);

    Options opt;
    auto add_common = [&opt](CLI::App* sub, bool with_verify) {
        sub->add_option("--config", opt.config_path, "JSON configuration file")->required();
        sub->add_option("--out", opt.out_dir, "Directory for report files");
        sub->add_option_function<std::uint64_t>(
            "--seed", [&opt](const std::uint64_t& v) { opt.seed = v; opt.seed_given = true; },
            "Monte Carlo seed (overrides config and GAMEHEDGE_SEED)");
        sub->add_option_function<std::size_t>(
            "--threads", [&opt](const std::size_t& v) { opt.threads = v; opt.threads_given = true; },
            "Worker threads (overrides config and GAMEHEDGE_THREADS)");
        if (with_verify) sub->add_flag("--verify", opt.verify, "Run the brute-force oracles");
    };
    auto* price = app.add_subcommand("price", "Game value, rational rules and sandwich check");
    auto* hedge = app.add_subcommand("hedge", "Hedge construction and exactness audits");
    auto* shortfall = app.add_subcommand("shortfall", "Monte Carlo shortfall and hedging gaps");
    auto* convergence = app.add_subcommand("convergence", "Lattice price across step counts");
    add_common(price, true);
    add_common(hedge, true);
    add_common(shortfall, false);
    add_common(convergence, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        print_error(out, e.what(), kExitConfig);
        err << e.what() << "\n";
        return kExitConfig;
    }

    try {
        const auto config = resolve(opt);
        std::filesystem::path dir;
        const std::filesystem::path* dir_ptr = nullptr;
        if (!opt.out_dir.empty()) {
            dir = opt.out_dir;
            std::error_code ec;
            std::filesystem::create_directories(dir, ec);
            if (ec || !std::filesystem::is_directory(dir)) {
                throw ConfigError("Cannot create output directory " + opt.out_dir);
            }
            dir_ptr = &dir;
        }
        if (price->parsed()) return cmd_price(config, opt.verify, out, dir_ptr);
        if (hedge->parsed()) return cmd_hedge(config, opt.verify, out, dir_ptr);
        if (shortfall->parsed()) return cmd_shortfall(config, out, dir_ptr);
        return cmd_convergence(config, out, dir_ptr);
    } catch (const ConfigError& e) {
        print_error(out, e.what(), kExitConfig);
        return kExitConfig;
    } catch (const ExperimentAborted& e) {
        print_error(out, e.what(), kExitAborted);
        return kExitAborted;
    } catch (const std::invalid_argument& e) {
        print_error(out, e.what(), kExitConfig);
        return kExitConfig;
    } catch (const std::length_error& e) {
        print_error(out, e.what(), kExitConfig);
        return kExitConfig;
    }
}

}  // namespace gamehedge::cli
