/**
 * @file hedging.cpp
 * @brief Doob decomposition, representation and hedge audits
 */

#include "gamehedge/hedging.hpp"
#include "gamehedge/path_tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gamehedge {

namespace {

bool absorbing_at(const std::vector<std::uint8_t>& mask, std::size_t k, std::size_t j) {
    return !mask.empty() && mask[NodeLattice::index(k, j)] != 0;
}

void check_moves(std::span<const int> moves, std::size_t n) {
    if (moves.size() != n) throw std::invalid_argument("Path length must equal the step count");
    for (int m : moves) {
        if (m != 1 && m != -1) throw std::invalid_argument("Path moves must be +1 or -1");
    }
}

}  // namespace

std::vector<double> DoobDecomposition::martingale_along(std::span<const int> moves) const {
    const std::size_t n = steps();
    check_moves(moves, n);
    std::vector<double> out(n + 1);
    out[0] = initial_value();
    std::size_t j = 0;
    bool stopped = false;
    for (std::size_t k = 0; k < n; ++k) {
        stopped = stopped || envelope.is_absorbing(k, j);
        double inc = 0.0;
        if (!stopped) inc = moves[k] == 1 ? martingale_up(k, j) : martingale_down(k, j);
        out[k + 1] = out[k] + inc;
        if (moves[k] == 1) ++j;
    }
    return out;
}

std::vector<double> DoobDecomposition::compensator_along(std::span<const int> moves) const {
    const std::size_t n = steps();
    check_moves(moves, n);
    std::vector<double> out(n + 1, 0.0);
    std::size_t j = 0;
    bool stopped = false;
    for (std::size_t k = 0; k < n; ++k) {
        stopped = stopped || envelope.is_absorbing(k, j);
        out[k + 1] = out[k] + (stopped ? 0.0 : compensator_step(k, j));
        if (moves[k] == 1) ++j;
    }
    return out;
}

DoobDecomposition doob_decompose(const ValueLattice& envelope, const StepModel& step) {
    const std::size_t n = envelope.steps();
    if (n != step.steps) throw std::invalid_argument("Envelope does not match the step model");
    const double p = step.up_probability;

    double scale = 1.0;
    for (double v : envelope.values.data()) scale = std::max(scale, std::abs(v));
    const double tolerance = 1e-10 * scale;

    DoobDecomposition out{envelope, NodeLattice(n), NodeLattice(n), NodeLattice(n)};
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t j = 0; j <= k; ++j) {
            if (absorbing_at(envelope.absorbing, k, j)) continue;
            const double up = envelope(k + 1, j + 1);
            const double down = envelope(k + 1, j);
            const double conditional = p * up + (1.0 - p) * down;
            const double da = envelope(k, j) - conditional;
            if (da < -tolerance) {
                throw std::domain_error("Envelope is not a supermartingale");
            }
            out.compensator_step(k, j) = da;
            out.martingale_up(k, j) = up - conditional;
            out.martingale_down(k, j) = down - conditional;
        }
    }
    return out;
}

NodeLattice representation_alpha(const ValueLattice& envelope, const StepModel& step) {
    const std::size_t n = envelope.steps();
    if (n != step.steps) throw std::invalid_argument("Envelope does not match the step model");
    const double factor = std::exp(-step.rate * step.dt) / std::expm1(step.log_ratio) *
                          (1.0 - step.up_probability);
    NodeLattice alpha(n);
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t j = 0; j <= k; ++j) {
            if (absorbing_at(envelope.absorbing, k, j)) continue;
            alpha(k, j) = factor * (envelope(k + 1, j + 1) - envelope(k + 1, j));
        }
    }
    return alpha;
}

HedgePlan hedge_ratios(const NodeLattice& alpha, const StockLattice& lat, const StepModel& step,
                       const ValueLattice& envelope) {
    const std::size_t n = step.steps;
    if (alpha.steps() != n || lat.steps != n || envelope.steps() != n) {
        throw std::invalid_argument("Hedge inputs disagree on the step count");
    }
    HedgePlan plan;
    plan.steps = n;
    plan.alpha = alpha;
    plan.gamma = NodeLattice(n);
    plan.absorbing = envelope.absorbing;
    plan.initial_capital = envelope(0, 0);
    for (std::size_t k = 1; k <= n; ++k) {
        const double growth = std::exp(step.rate * step.dt * static_cast<double>(k));
        for (std::size_t j = 0; j < k; ++j) {
            plan.gamma(k - 1, j) = alpha(k - 1, j) * growth / lat.price(k - 1, j);
        }
    }
    return plan;
}

std::vector<double> portfolio_trajectory(const HedgePlan& plan, std::span<const int> moves,
                                         const StepModel& step, const StockLattice& lat) {
    const std::size_t n = plan.steps;
    if (step.steps != n || lat.steps != n) {
        throw std::invalid_argument("Hedge plan does not match the lattice");
    }
    check_moves(moves, n);
    std::vector<double> z(n + 1);
    z[0] = plan.initial_capital;
    std::size_t j = 0;
    bool stopped = false;
    for (std::size_t k = 1; k <= n; ++k) {
        stopped = stopped || plan.is_absorbing(k - 1, j);
        const std::size_t next = moves[k - 1] == 1 ? j + 1 : j;
        const double units = stopped ? 0.0 : plan.gamma(k - 1, j);
        z[k] = z[k - 1] + units * (lat.discounted(k, next) - lat.discounted(k - 1, j));
        j = next;
    }
    return z;
}

HedgeAudit audit_hedge(const DoobDecomposition& doob, const HedgePlan& plan,
                       const StockLattice& lat, const StepModel& step, double lipschitz) {
    const std::size_t n = doob.steps();
    if (plan.steps != n || lat.steps != n || step.steps != n) {
        throw std::invalid_argument("Audit inputs disagree on the step count");
    }
    const double p = step.up_probability;
    const double excess_up = step.up_return - step.step_rate;
    const double excess_down = step.down_return - step.step_rate;
    const auto& u = doob.envelope;

    HedgeAudit a;
    a.initial_capital = plan.initial_capital;
    a.min_compensator_step = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t j = 0; j <= k; ++j) {
            const double scale = std::max(lat.discounted(k, j), std::abs(u(k, j)));
            const double dm_up = doob.martingale_up(k, j);
            const double dm_down = doob.martingale_down(k, j);
            const double alpha = plan.alpha(k, j);
            const double gamma = plan.gamma(k, j);
            const double representation =
                std::max(std::abs(dm_up - alpha * excess_up), std::abs(dm_down - alpha * excess_down));
            const double ds_up = lat.discounted(k + 1, j + 1) - lat.discounted(k, j);
            const double ds_down = lat.discounted(k + 1, j) - lat.discounted(k, j);
            const double self_financing =
                std::max(std::abs(dm_up - gamma * ds_up), std::abs(dm_down - gamma * ds_down));
            const double martingale = std::abs(p * dm_up + (1.0 - p) * dm_down);
            a.representation_residual = std::max(a.representation_residual, representation);
            a.self_financing_residual = std::max(a.self_financing_residual, self_financing);
            a.martingale_residual = std::max(a.martingale_residual, martingale);
            a.representation_relative = std::max(a.representation_relative, representation / scale);
            a.self_financing_relative = std::max(a.self_financing_relative, self_financing / scale);
            a.martingale_relative = std::max(a.martingale_relative, martingale / scale);
            a.min_compensator_step = std::min(a.min_compensator_step, doob.compensator_step(k, j));
            if (!u.is_absorbing(k, j)) {
                const double da_up = dm_up - (u(k + 1, j + 1) - u(k, j));
                const double da_down = dm_down - (u(k + 1, j) - u(k, j));
                a.predictability_residual =
                    std::max(a.predictability_residual, std::abs(da_up - da_down));
                a.predictability_relative =
                    std::max(a.predictability_relative, std::abs(da_up - da_down) / scale);
            }
            a.max_abs_gamma = std::max(a.max_abs_gamma, std::abs(gamma));
            a.max_alpha_ratio =
                std::max(a.max_alpha_ratio, std::abs(alpha) / (lipschitz * lat.discounted(k, j)));
        }
    }
    if (n == 0) a.min_compensator_step = 0.0;
    return a;
}

SuperhedgeReport verify_superhedge(const HedgePlan& plan, const DoobDecomposition& doob,
                                   const PayoffLattices& payoffs, const StoppingRule& canceller,
                                   double tolerance) {
    const std::size_t n = doob.steps();
    if (plan.steps != n || canceller.steps() != n || payoffs.holder.steps() != n) {
        throw std::invalid_argument("Superhedge inputs disagree on the step count");
    }
    const auto& u = doob.envelope;
    SuperhedgeReport r;
    r.worst_margin = std::numeric_limits<double>::infinity();
    r.min_compensator_step = std::numeric_limits<double>::infinity();
    bool consistent = true;
    for (std::size_t k = 0; k <= n; ++k) {
        for (std::size_t j = 0; j <= k; ++j) {
            const bool cancels = k < n && canceller.stops_at(k, j);
            if (k < n && cancels != u.is_absorbing(k, j)) consistent = false;
            const double g = cancels ? payoffs.canceller(k, j) : payoffs.holder(k, j);
            const double margin = u(k, j) - g;
            if (margin < r.worst_margin) {
                r.worst_margin = margin;
                r.worst_step = k;
                r.worst_node = j;
            }
            if (k < n) {
                r.min_compensator_step = std::min(r.min_compensator_step, doob.compensator_step(k, j));
            }
        }
    }
    if (n == 0) r.min_compensator_step = 0.0;
    r.dominated = consistent && r.worst_margin >= -tolerance && r.min_compensator_step >= -tolerance;
    return r;
}

double exhaustive_superhedge_margin(const HedgePlan& plan, const PayoffLattices& payoffs,
                                    const StoppingRule& canceller, const StepModel& step,
                                    const StockLattice& lat) {
    const std::size_t n = step.steps;
    path_tree::check_steps(n, kMaxEnumerationSteps);
    const auto cancel_rule = PathRule::from_lattice(canceller);
    const auto rules = enumerate_rules(n);

    double worst = std::numeric_limits<double>::infinity();
    for (std::uint32_t path = 0; path < path_tree::path_count(n); ++path) {
        const auto moves = path_tree::path_moves(path, n);
        const auto z = portfolio_trajectory(plan, moves, step, lat);
        const std::size_t s = cancel_rule.first_stop(path);
        for (const auto& rule : rules) {
            const std::size_t t = rule.first_stop(path);
            const std::size_t stop = std::min(s, t);
            const std::size_t j = path_tree::ups(path_tree::prefix_of(path, stop));
            const double q = s < t ? payoffs.canceller(s, j) : payoffs.holder(t, j);
            worst = std::min(worst, z[stop] - q);
        }
    }
    return worst;
}

GameSolution solve_game(const GamePayoffSpec& spec, const MarketParams& params, std::size_t n) {
    GameSolution g;
    g.params = params;
    g.step = make_step_model(params, n);
    g.lattice = build_stock_lattice(g.step, params);
    g.payoffs = payoff_lattices(spec, g.lattice, g.step);
    g.value = game_value(g.payoffs, g.step);
    g.rules = rational_stopping(g.value, g.payoffs, kStoppingTolerance * params.spot);
    auto envelope = one_sided_envelope(g.rules.canceller, g.payoffs, g.step);
    const auto alpha = representation_alpha(envelope, g.step);
    g.plan = hedge_ratios(alpha, g.lattice, g.step, envelope);
    g.doob = doob_decompose(envelope, g.step);
    return g;
}

}  // namespace gamehedge
