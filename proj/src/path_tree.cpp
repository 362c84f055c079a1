/**
 * @file path_tree.cpp
 * @brief Path-tree oracles
 */

#include "gamehedge/path_tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace gamehedge {

namespace path_tree {

void check_steps(std::size_t steps, std::size_t limit) {
    if (steps > limit) {
        throw std::length_error("Path tree with " + std::to_string(steps) +
                                " steps exceeds the limit of " + std::to_string(limit));
    }
}

double path_probability(std::uint32_t path, std::size_t steps, double up_probability) {
    const auto u = static_cast<int>(ups(prefix_of(path, steps)));
    const auto d = static_cast<int>(steps) - u;
    return std::pow(up_probability, u) * std::pow(1.0 - up_probability, d);
}

std::vector<int> path_moves(std::uint32_t path, std::size_t steps) {
    std::vector<int> moves(steps);
    for (std::size_t i = 0; i < steps; ++i) moves[i] = ((path >> i) & 1u) ? 1 : -1;
    return moves;
}

}  // namespace path_tree

using path_tree::node_id;

namespace {

struct PathTable {
    std::size_t steps = 0;
    std::size_t paths = 0;
    std::vector<double> probability;
    std::vector<double> holder;     // [path * (n + 1) + k]
    std::vector<double> canceller;
};

PathTable tabulate(const PayoffLattices& payoffs, const StepModel& step) {
    const std::size_t n = step.steps;
    if (payoffs.holder.steps() != n || payoffs.canceller.steps() != n) {
        throw std::invalid_argument("Payoff lattices do not match the step model");
    }
    PathTable t;
    t.steps = n;
    t.paths = path_tree::path_count(n);
    t.probability.resize(t.paths);
    t.holder.resize(t.paths * (n + 1));
    t.canceller.resize(t.paths * (n + 1));
    for (std::uint32_t path = 0; path < t.paths; ++path) {
        t.probability[path] = path_tree::path_probability(path, n, step.up_probability);
        for (std::size_t k = 0; k <= n; ++k) {
            const std::size_t j = path_tree::ups(path_tree::prefix_of(path, k));
            t.holder[path * (n + 1) + k] = payoffs.holder(k, j);
            t.canceller[path * (n + 1) + k] = payoffs.canceller(k, j);
        }
    }
    return t;
}

std::vector<std::uint8_t> stop_times(const PathRule& rule, std::size_t paths) {
    std::vector<std::uint8_t> out(paths);
    for (std::uint32_t path = 0; path < paths; ++path) {
        out[path] = static_cast<std::uint8_t>(rule.first_stop(path));
    }
    return out;
}

double expectation(const PathTable& t, const std::uint8_t* cancel, const std::uint8_t* exercise) {
    double sum = 0.0;
    for (std::size_t path = 0; path < t.paths; ++path) {
        const std::size_t s = cancel[path];
        const std::size_t e = exercise[path];
        const std::size_t row = path * (t.steps + 1);
        const double q = s < e ? t.canceller[row + s] : t.holder[row + e];
        sum += t.probability[path] * q;
    }
    return sum;
}

// Stopping-time table for each enumerated rule, row-major [rule][path].
std::vector<std::uint8_t> all_stop_times(const std::vector<PathRule>& rules, std::size_t paths) {
    std::vector<std::uint8_t> out(rules.size() * paths);
    for (std::size_t r = 0; r < rules.size(); ++r) {
        const auto times = stop_times(rules[r], paths);
        std::copy(times.begin(), times.end(), out.begin() + static_cast<std::ptrdiff_t>(r * paths));
    }
    return out;
}

void enumerate_subtree(std::size_t steps, std::size_t k, std::uint32_t prefix,
                       std::vector<std::vector<std::size_t>>& out) {
    out.clear();
    const std::size_t id = node_id(k, prefix);
    out.push_back({id});
    if (k == steps) return;
    std::vector<std::vector<std::size_t>> up;
    std::vector<std::vector<std::size_t>> down;
    enumerate_subtree(steps, k + 1, prefix | (1u << k), up);
    enumerate_subtree(steps, k + 1, prefix, down);
    for (const auto& a : up) {
        for (const auto& b : down) {
            std::vector<std::size_t> rule(a);
            rule.insert(rule.end(), b.begin(), b.end());
            out.push_back(std::move(rule));
        }
    }
}

}  // namespace

PathRule::PathRule(std::size_t steps)
    : steps_(steps), stop_(path_tree::node_count(steps), 0) {
    path_tree::check_steps(steps);
    for (std::uint32_t leaf = 0; leaf < path_tree::path_count(steps); ++leaf) {
        stop_[node_id(steps, leaf)] = 1;
    }
}

PathRule PathRule::from_lattice(const StoppingRule& rule) {
    PathRule out(rule.steps());
    for (std::size_t k = 0; k <= rule.steps(); ++k) {
        for (std::uint32_t prefix = 0; prefix < (1u << k); ++prefix) {
            out.set_stop(node_id(k, prefix), rule.stops_at(k, path_tree::ups(prefix)));
        }
    }
    return out;
}

std::size_t PathRule::first_stop(std::uint32_t path) const {
    for (std::size_t k = 0; k < steps_; ++k) {
        if (stop_[node_id(k, path_tree::prefix_of(path, k))]) return k;
    }
    return steps_;
}

std::vector<PathRule> enumerate_rules(std::size_t steps) {
    path_tree::check_steps(steps, kMaxEnumerationSteps);
    std::vector<std::vector<std::size_t>> sets;
    enumerate_subtree(steps, 0, 0, sets);
    std::vector<PathRule> rules;
    rules.reserve(sets.size());
    for (const auto& set : sets) {
        PathRule rule(steps);
        for (std::size_t id : set) rule.set_stop(id);
        rules.push_back(std::move(rule));
    }
    return rules;
}

double expected_game_payoff(const PathRule& canceller, const PathRule& holder,
                            const PayoffLattices& payoffs, const StepModel& step) {
    if (canceller.steps() != step.steps || holder.steps() != step.steps) {
        throw std::invalid_argument("Rules do not match the step model");
    }
    const auto table = tabulate(payoffs, step);
    const auto cancel = stop_times(canceller, table.paths);
    const auto exercise = stop_times(holder, table.paths);
    return expectation(table, cancel.data(), exercise.data());
}

BruteForceResult brute_force_value(const PayoffLattices& payoffs, const StepModel& step) {
    path_tree::check_steps(step.steps, kMaxEnumerationSteps);
    const auto table = tabulate(payoffs, step);
    const auto rules = enumerate_rules(step.steps);
    const std::size_t count = rules.size();
    const auto times = all_stop_times(rules, table.paths);

    std::vector<double> matrix(count * count);
    for (std::size_t c = 0; c < count; ++c) {
        for (std::size_t h = 0; h < count; ++h) {
            matrix[c * count + h] =
                expectation(table, &times[c * table.paths], &times[h * table.paths]);
        }
    }

    BruteForceResult result;
    result.rule_count = count;
    result.upper = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < count; ++c) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t h = 0; h < count; ++h) best = std::max(best, matrix[c * count + h]);
        result.upper = std::min(result.upper, best);
    }
    result.lower = -std::numeric_limits<double>::infinity();
    for (std::size_t h = 0; h < count; ++h) {
        double worst = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < count; ++c) worst = std::min(worst, matrix[c * count + h]);
        result.lower = std::max(result.lower, worst);
    }
    return result;
}

double best_holder_response(const PathRule& canceller, const PayoffLattices& payoffs,
                            const StepModel& step) {
    path_tree::check_steps(step.steps, kMaxEnumerationSteps);
    const auto table = tabulate(payoffs, step);
    const auto cancel = stop_times(canceller, table.paths);
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& rule : enumerate_rules(step.steps)) {
        const auto exercise = stop_times(rule, table.paths);
        best = std::max(best, expectation(table, cancel.data(), exercise.data()));
    }
    return best;
}

double best_canceller_response(const PathRule& holder, const PayoffLattices& payoffs,
                               const StepModel& step) {
    path_tree::check_steps(step.steps, kMaxEnumerationSteps);
    const auto table = tabulate(payoffs, step);
    const auto exercise = stop_times(holder, table.paths);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& rule : enumerate_rules(step.steps)) {
        const auto cancel = stop_times(rule, table.paths);
        best = std::min(best, expectation(table, cancel.data(), exercise.data()));
    }
    return best;
}

std::vector<double> path_tree_game_value(const PayoffLattices& payoffs, const StepModel& step) {
    const std::size_t n = step.steps;
    path_tree::check_steps(n);
    const double p = step.up_probability;
    std::vector<double> v(path_tree::node_count(n));
    for (std::uint32_t prefix = 0; prefix < (1u << n); ++prefix) {
        v[node_id(n, prefix)] = payoffs.holder(n, path_tree::ups(prefix));
    }
    for (std::size_t k = n; k-- > 0;) {
        for (std::uint32_t prefix = 0; prefix < (1u << k); ++prefix) {
            const std::size_t j = path_tree::ups(prefix);
            const double cont = p * v[node_id(k + 1, prefix | (1u << k))] +
                                (1.0 - p) * v[node_id(k + 1, prefix)];
            v[node_id(k, prefix)] =
                std::min(payoffs.canceller(k, j), std::max(payoffs.holder(k, j), cont));
        }
    }
    return v;
}

std::vector<double> path_tree_envelope(const PathRule& canceller, const PayoffLattices& payoffs,
                                       const StepModel& step) {
    const std::size_t n = step.steps;
    path_tree::check_steps(n);
    if (canceller.steps() != n) throw std::invalid_argument("Rule does not match the step model");
    const double p = step.up_probability;
    const std::size_t nodes = path_tree::node_count(n);

    // Payoff process G, walking forward so the frozen payment is inherited.
    std::vector<double> g(nodes);
    std::vector<double> frozen(nodes, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t k = 0; k <= n; ++k) {
        for (std::uint32_t prefix = 0; prefix < (1u << k); ++prefix) {
            const std::size_t id = node_id(k, prefix);
            const std::size_t j = path_tree::ups(prefix);
            double inherited = std::numeric_limits<double>::quiet_NaN();
            if (k > 0) inherited = frozen[node_id(k - 1, path_tree::prefix_of(prefix, k - 1))];
            if (!std::isnan(inherited)) {
                g[id] = inherited;
                frozen[id] = inherited;
            } else {
                g[id] = payoffs.holder(k, j);
                if (canceller.stops_at(id)) frozen[id] = payoffs.canceller(k, j);
            }
        }
    }

    std::vector<double> u(nodes);
    for (std::uint32_t prefix = 0; prefix < (1u << n); ++prefix) {
        u[node_id(n, prefix)] = g[node_id(n, prefix)];
    }
    for (std::size_t k = n; k-- > 0;) {
        for (std::uint32_t prefix = 0; prefix < (1u << k); ++prefix) {
            const double cont = p * u[node_id(k + 1, prefix | (1u << k))] +
                                (1.0 - p) * u[node_id(k + 1, prefix)];
            u[node_id(k, prefix)] = std::max(g[node_id(k, prefix)], cont);
        }
    }
    return u;
}

PathTreeDoob path_tree_doob(const std::vector<double>& envelope, const StepModel& step) {
    const std::size_t n = step.steps;
    path_tree::check_steps(n);
    if (envelope.size() != path_tree::node_count(n)) {
        throw std::invalid_argument("Envelope does not match the path tree");
    }
    const double p = step.up_probability;
    PathTreeDoob out{std::vector<double>(envelope.size()), std::vector<double>(envelope.size())};
    out.martingale[0] = envelope[0];
    out.compensator[0] = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
        for (std::uint32_t prefix = 0; prefix < (1u << k); ++prefix) {
            const std::uint32_t parent = path_tree::prefix_of(prefix, k - 1);
            const double conditional = p * envelope[node_id(k, parent | (1u << (k - 1)))] +
                                       (1.0 - p) * envelope[node_id(k, parent)];
            const std::size_t id = node_id(k, prefix);
            out.martingale[id] =
                out.martingale[node_id(k - 1, parent)] + envelope[id] - conditional;
            out.compensator[id] = out.martingale[id] - envelope[id];
        }
    }
    return out;
}

}  // namespace gamehedge
