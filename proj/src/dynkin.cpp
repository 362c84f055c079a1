/**
 * @file dynkin.cpp
 * @brief Backward induction for the game value and the one-sided envelope
 */

#include "gamehedge/dynkin.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gamehedge {

namespace {

void check_payoffs(const PayoffLattices& payoffs, const StepModel& step) {
    if (payoffs.holder.steps() != step.steps || payoffs.canceller.steps() != step.steps ||
        payoffs.holder.size() != payoffs.canceller.size()) {
        throw std::invalid_argument("Payoff lattices do not match the step model");
    }
}

}  // namespace

StoppingRule::StoppingRule(std::size_t steps, RuleRole role)
    : steps_(steps), role_(role), stop_(NodeLattice::node_count(steps), 0) {
    for (std::size_t j = 0; j <= steps; ++j) stop_[NodeLattice::index(steps, j)] = 1;
}

StoppingRule StoppingRule::at_maturity(std::size_t steps, RuleRole role) {
    return StoppingRule(steps, role);
}

StoppingRule StoppingRule::immediately(std::size_t steps, RuleRole role) {
    StoppingRule rule(steps, role);
    rule.set_stop(0, 0);
    return rule;
}

void StoppingRule::set_stop(std::size_t k, std::size_t j, bool value) {
    if (k > steps_ || j > k) throw std::out_of_range("Node outside the lattice");
    if (k == steps_ && !value) {
        throw std::invalid_argument("Stopping rules must stop at maturity");
    }
    stop_[NodeLattice::index(k, j)] = value ? 1 : 0;
}

std::size_t StoppingRule::first_stop(std::span<const int> moves) const {
    if (moves.size() < steps_) throw std::invalid_argument("Path shorter than the rule");
    std::size_t j = 0;
    for (std::size_t k = 0; k < steps_; ++k) {
        if (stops_at(k, j)) return k;
        if (moves[k] == 1) {
            ++j;
        } else if (moves[k] != -1) {
            throw std::invalid_argument("Path moves must be +1 or -1");
        }
    }
    return steps_;
}

ValueLattice game_value(const PayoffLattices& payoffs, const StepModel& step) {
    check_payoffs(payoffs, step);
    const std::size_t n = step.steps;
    const double p = step.up_probability;
    ValueLattice out{ValueKind::DynkinValue, NodeLattice(n), {}};
    auto& v = out.values;
    for (std::size_t j = 0; j <= n; ++j) v(n, j) = payoffs.holder(n, j);
    for (std::size_t k = n; k-- > 0;) {
        for (std::size_t j = 0; j <= k; ++j) {
            const double cont = p * v(k + 1, j + 1) + (1.0 - p) * v(k + 1, j);
            v(k, j) = std::min(payoffs.canceller(k, j), std::max(payoffs.holder(k, j), cont));
        }
    }
    return out;
}

NodeLattice american_value(const NodeLattice& holder, const StepModel& step) {
    if (holder.steps() != step.steps) {
        throw std::invalid_argument("Payoff lattice does not match the step model");
    }
    const std::size_t n = step.steps;
    const double p = step.up_probability;
    // Rolling level buffer rather than a full lattice.
    std::vector<double> next(holder.level(n).begin(), holder.level(n).end());
    NodeLattice out(n);
    std::copy(next.begin(), next.end(), out.level(n).begin());
    for (std::size_t k = n; k-- > 0;) {
        for (std::size_t j = 0; j <= k; ++j) {
            const double cont = p * next[j + 1] + (1.0 - p) * next[j];
            next[j] = holder(k, j) > cont ? holder(k, j) : cont;
        }
        next.resize(k + 1);
        std::copy(next.begin(), next.end(), out.level(k).begin());
    }
    return out;
}

RationalRules rational_stopping(const ValueLattice& value, const PayoffLattices& payoffs,
                                double tolerance) {
    if (value.kind != ValueKind::DynkinValue) {
        throw std::invalid_argument("Rational stopping needs a Dynkin value lattice");
    }
    const std::size_t n = value.steps();
    if (payoffs.holder.steps() != n || payoffs.canceller.steps() != n) {
        throw std::invalid_argument("Payoff lattices do not match the value lattice");
    }
    if (!(tolerance >= 0.0)) throw std::invalid_argument("Tolerance must be non-negative");

    RationalRules rules{StoppingRule(n, RuleRole::Canceller), StoppingRule(n, RuleRole::Holder)};
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t j = 0; j <= k; ++j) {
            const double v = value(k, j);
            if (std::abs(v - payoffs.canceller(k, j)) <= tolerance) rules.canceller.set_stop(k, j);
            if (std::abs(v - payoffs.holder(k, j)) <= tolerance) rules.holder.set_stop(k, j);
        }
    }
    return rules;
}

ValueLattice one_sided_envelope(const StoppingRule& canceller, const PayoffLattices& payoffs,
                                const StepModel& step) {
    check_payoffs(payoffs, step);
    const std::size_t n = step.steps;
    if (canceller.steps() != n) {
        throw std::invalid_argument("Cancellation rule does not match the step model");
    }
    const double p = step.up_probability;
    ValueLattice out{ValueKind::OneSidedEnvelope, NodeLattice(n),
                     std::vector<std::uint8_t>(NodeLattice::node_count(n), 0)};
    auto& u = out.values;
    for (std::size_t j = 0; j <= n; ++j) {
        u(n, j) = payoffs.holder(n, j);
        out.absorbing[NodeLattice::index(n, j)] = 1;
    }
    for (std::size_t k = n; k-- > 0;) {
        for (std::size_t j = 0; j <= k; ++j) {
            if (canceller.stops_at(k, j)) {
                // Exercise at the cancellation step pays Y-hat <= X-hat; waiting
                // pays X-hat.
                u(k, j) = std::max(payoffs.holder(k, j), payoffs.canceller(k, j));
                out.absorbing[NodeLattice::index(k, j)] = 1;
            } else {
                const double cont = p * u(k + 1, j + 1) + (1.0 - p) * u(k + 1, j);
                u(k, j) = std::max(payoffs.holder(k, j), cont);
            }
        }
    }
    return out;
}

}  // namespace gamehedge
