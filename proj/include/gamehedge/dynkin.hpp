/**
 * @file dynkin.hpp
 * @brief Dynkin-game valuation of game options on the recombining lattice,
 *        rational stopping rules and the one-sided Snell envelope for a fixed
 *        cancellation rule.
 *
 * All values are discounted. The payoff of a (cancel, exercise) pair (s, t)
 * is X-hat(s) when s < t and Y-hat(t) when t <= s; the holder wins ties.
 */

#ifndef GAMEHEDGE_DYNKIN_HPP
#define GAMEHEDGE_DYNKIN_HPP

#include "gamehedge/model.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace gamehedge {

enum class ValueKind { DynkinValue, OneSidedEnvelope, DoobMartingale, DoobCompensator };

struct ValueLattice {
    ValueKind kind = ValueKind::DynkinValue;
    NodeLattice values;
    /// One-sided envelopes only: nodes at which the fixed cancellation rule
    /// stops. The envelope there is the cancellation payment and the
    /// stopped process does not move afterwards.
    std::vector<std::uint8_t> absorbing;

    std::size_t steps() const { return values.steps(); }
    double operator()(std::size_t k, std::size_t j) const { return values(k, j); }
    bool is_absorbing(std::size_t k, std::size_t j) const {
        return !absorbing.empty() && absorbing[NodeLattice::index(k, j)] != 0;
    }
};

enum class RuleRole { Canceller, Holder, Evaluation };

/**
 * Stopping rule given by a set of lattice nodes: it stops at the first node of
 * the set visited by the path. Every node at k = n belongs to the set.
 */
class StoppingRule {
public:
    StoppingRule() = default;
    StoppingRule(std::size_t steps, RuleRole role);

    /// Rule that stops only at maturity.
    static StoppingRule at_maturity(std::size_t steps, RuleRole role);
    /// Rule that stops at the root.
    static StoppingRule immediately(std::size_t steps, RuleRole role);

    std::size_t steps() const { return steps_; }
    RuleRole role() const { return role_; }
    bool stops_at(std::size_t k, std::size_t j) const {
        return stop_[NodeLattice::index(k, j)] != 0;
    }
    void set_stop(std::size_t k, std::size_t j, bool value = true);
    std::span<const std::uint8_t> mask() const { return stop_; }

    /// First stopping step along a path of up (+1) / down (-1) moves.
    std::size_t first_stop(std::span<const int> moves) const;

private:
    std::size_t steps_ = 0;
    RuleRole role_ = RuleRole::Evaluation;
    std::vector<std::uint8_t> stop_;
};

/// V(n) = Y-hat(n); V = min(X-hat, max(Y-hat, continuation)) before maturity.
ValueLattice game_value(const PayoffLattices& payoffs, const StepModel& step);

/// Single-player Snell envelope max(Y-hat, continuation) of the holder payoff.
NodeLattice american_value(const NodeLattice& holder, const StepModel& step);

/// Default equality tolerance for rational stopping, relative to the spot.
inline constexpr double kStoppingTolerance = 1e-9;

struct RationalRules {
    StoppingRule canceller;  ///< first node with V = X-hat, or maturity
    StoppingRule holder;     ///< first node with V = Y-hat
};

/// Equality is tested with absolute tolerance `tolerance` (usually 1e-9 z).
RationalRules rational_stopping(const ValueLattice& value, const PayoffLattices& payoffs,
                                double tolerance);

/**
 * Snell envelope of the holder's problem against the fixed cancellation rule.
 *
 * The lattice holds the value conditional on the rule not having stopped
 * before reaching the node; that is a node function for any first-hitting
 * rule. At stop nodes (k < n) it equals X-hat.
 */
ValueLattice one_sided_envelope(const StoppingRule& canceller, const PayoffLattices& payoffs,
                                const StepModel& step);

}  // namespace gamehedge

#endif  // GAMEHEDGE_DYNKIN_HPP
