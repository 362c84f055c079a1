/**
 * @file model.cpp
 * @brief CRR step model, stock lattice and payoff lattices
 */

#include "gamehedge/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace gamehedge {

void MarketParams::validate() const {
    if (!std::isfinite(rate) || !std::isfinite(volatility) || !std::isfinite(maturity) ||
        !std::isfinite(spot)) {
        throw std::invalid_argument("Market parameters must be finite");
    }
    if (volatility <= 0.0) throw std::invalid_argument("Volatility must be positive");
    if (maturity <= 0.0) throw std::invalid_argument("Maturity must be positive");
    if (spot <= 0.0) throw std::invalid_argument("Spot must be positive");
    if (rate < 0.0) throw std::invalid_argument("Rate must be non-negative");
}

double StepModel::discount(std::size_t k) const {
    return std::exp(-rate * dt * static_cast<double>(k));
}

double StepModel::martingale_residual() const {
    return up_probability * (up_return - step_rate) +
           (1.0 - up_probability) * (down_return - step_rate);
}

StepModel make_step_model(const MarketParams& params, std::size_t n) {
    params.validate();
    if (n == 0) throw std::invalid_argument("Step count must be at least 1");

    StepModel step;
    step.steps = n;
    step.dt = params.maturity / static_cast<double>(n);
    step.increment = std::sqrt(step.dt);
    step.rate = params.rate;
    step.log_ratio = params.volatility * step.increment;

    const double drift = params.rate * step.dt;
    step.step_rate = std::expm1(drift);
    step.up_return = std::expm1(drift + step.log_ratio);
    step.down_return = std::expm1(drift - step.log_ratio);
    // p (e^{kh} - 1) + (1 - p)(e^{-kh} - 1) = 0
    step.up_probability = 1.0 / (std::exp(step.log_ratio) + 1.0);

    if (!(step.down_return < step.step_rate && step.step_rate < step.up_return)) {
        throw std::invalid_argument("Step model admits arbitrage; volatility too small");
    }
    return step;
}

NodeLattice::NodeLattice(std::size_t steps, double fill)
    : steps_(steps), data_(node_count(steps), fill) {}

StockLattice build_stock_lattice(const StepModel& step, const MarketParams& params,
                                 std::size_t max_nodes) {
    params.validate();
    const std::size_t n = step.steps;
    if (n == 0) throw std::invalid_argument("Step count must be at least 1");
    if (n >= max_nodes || NodeLattice::node_count(n) > max_nodes) {
        throw std::length_error("Lattice with " + std::to_string(n) +
                                " steps exceeds the node limit");
    }

    StockLattice lat;
    lat.steps = n;
    lat.price = NodeLattice(n);
    lat.discounted = NodeLattice(n);
    const double drift = params.rate * step.dt;
    for (std::size_t k = 0; k <= n; ++k) {
        for (std::size_t j = 0; j <= k; ++j) {
            const double moves = 2.0 * static_cast<double>(j) - static_cast<double>(k);
            const double log_disc = step.log_ratio * moves;
            lat.discounted(k, j) = params.spot * std::exp(log_disc);
            lat.price(k, j) = params.spot * std::exp(drift * static_cast<double>(k) + log_disc);
        }
    }
    return lat;
}

GamePayoffSpec game_put(double strike, double penalty) {
    if (!(strike >= 0.0) || !(penalty >= 0.0) || !std::isfinite(strike) ||
        !std::isfinite(penalty)) {
        throw std::invalid_argument("Put strike and penalty must be finite and non-negative");
    }
    GamePayoffSpec spec;
    spec.kind = PayoffKind::Put;
    spec.strike = strike;
    spec.intrinsic = [strike](double, double s) { return std::max(strike - s, 0.0); };
    spec.penalty = [penalty](double) { return penalty; };
    spec.lipschitz = 1.0;
    return spec;
}

GamePayoffSpec game_call(double strike, double penalty) {
    if (!(strike >= 0.0) || !(penalty >= 0.0) || !std::isfinite(strike) ||
        !std::isfinite(penalty)) {
        throw std::invalid_argument("Call strike and penalty must be finite and non-negative");
    }
    GamePayoffSpec spec;
    spec.kind = PayoffKind::Call;
    spec.strike = strike;
    spec.intrinsic = [strike](double, double s) { return std::max(s - strike, 0.0); };
    spec.penalty = [penalty](double) { return penalty; };
    spec.lipschitz = 1.0;
    return spec;
}

PayoffLattices payoff_lattices(const GamePayoffSpec& spec, const StockLattice& lat,
                               const StepModel& step) {
    if (!spec.intrinsic || !spec.penalty) {
        throw std::invalid_argument("Payoff spec is missing a payoff function");
    }
    if (lat.steps != step.steps) {
        throw std::invalid_argument("Stock lattice and step model disagree on step count");
    }
    const std::size_t n = step.steps;
    PayoffLattices out{NodeLattice(n), NodeLattice(n)};
    for (std::size_t k = 0; k <= n; ++k) {
        const double t = step.dt * static_cast<double>(k);
        const double disc = step.discount(k);
        const double delta = spec.penalty(t);
        if (!std::isfinite(delta) || delta < 0.0) {
            throw std::domain_error("Penalty must be finite and non-negative");
        }
        for (std::size_t j = 0; j <= k; ++j) {
            const double y = spec.intrinsic(t, lat.price(k, j));
            if (!std::isfinite(y) || y < 0.0) {
                throw std::domain_error("Holder payoff must be finite and non-negative");
            }
            out.holder(k, j) = disc * y;
            out.canceller(k, j) = disc * y + disc * delta;
        }
    }
    return out;
}

}  // namespace gamehedge
