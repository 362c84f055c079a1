/**
 * @file path_tree.hpp
 * @brief Non-recombining binary path tree: adapted stopping rules, exhaustive
 *        rule enumeration and the brute-force game value used as an oracle
 *        for the lattice engine.
 *
 * A tree node is (k, prefix) where bit i of prefix is the (i+1)-th move
 * (1 = up). Its id is 2^k - 1 + prefix.
 */

#ifndef GAMEHEDGE_PATH_TREE_HPP
#define GAMEHEDGE_PATH_TREE_HPP

#include "gamehedge/dynkin.hpp"
#include "gamehedge/model.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace gamehedge {

/// Full enumeration of rule pairs is limited to this many steps.
inline constexpr std::size_t kMaxEnumerationSteps = 4;
/// Path-tree dynamic programming is limited to this many steps.
inline constexpr std::size_t kMaxPathTreeSteps = 20;

namespace path_tree {

inline std::size_t node_id(std::size_t k, std::uint32_t prefix) {
    return (std::size_t{1} << k) - 1 + prefix;
}
inline std::size_t node_count(std::size_t steps) { return (std::size_t{1} << (steps + 1)) - 1; }
inline std::size_t path_count(std::size_t steps) { return std::size_t{1} << steps; }
/// Prefix of the first k moves of a full path.
inline std::uint32_t prefix_of(std::uint32_t path, std::size_t k) {
    return k == 0 ? 0u : (path & ((1u << k) - 1u));
}
inline std::size_t ups(std::uint32_t prefix) {
    return static_cast<std::size_t>(__builtin_popcount(prefix));
}

/// Throws std::length_error when steps exceeds kMaxPathTreeSteps.
void check_steps(std::size_t steps, std::size_t limit = kMaxPathTreeSteps);

/// p^ups (1 - p)^downs of a full path.
double path_probability(std::uint32_t path, std::size_t steps, double up_probability);

/// Moves (+1/-1) of a full path.
std::vector<int> path_moves(std::uint32_t path, std::size_t steps);

}  // namespace path_tree

/**
 * Adapted stopping rule on the path tree: stops at the first node of its set
 * along the path. All leaves are stop nodes.
 */
class PathRule {
public:
    PathRule() = default;
    explicit PathRule(std::size_t steps);

    static PathRule from_lattice(const StoppingRule& rule);

    std::size_t steps() const { return steps_; }
    bool stops_at(std::size_t id) const { return stop_[id] != 0; }
    void set_stop(std::size_t id, bool value = true) { stop_[id] = value ? 1 : 0; }
    std::size_t first_stop(std::uint32_t path) const;

private:
    std::size_t steps_ = 0;
    std::vector<std::uint8_t> stop_;
};

/// All adapted stopping rules on the tree (count 1, 2, 5, 26, 677 for n = 0..4).
/// Throws std::length_error beyond kMaxEnumerationSteps.
std::vector<PathRule> enumerate_rules(std::size_t steps);

/// E[X-hat(zeta) 1{zeta < nu} + Y-hat(nu) 1{nu <= zeta}] under the martingale measure.
double expected_game_payoff(const PathRule& canceller, const PathRule& holder,
                            const PayoffLattices& payoffs, const StepModel& step);

struct BruteForceResult {
    double upper = 0.0;  ///< min over cancellation rules of max over exercise rules
    double lower = 0.0;  ///< max over exercise rules of min over cancellation rules
    std::size_t rule_count = 0;
    double value() const { return upper; }
    /// Certificate: min-max and max-min agree within the tolerance.
    bool saddle(double tolerance) const { return upper - lower <= tolerance; }
};

/// Enumerates every pair of adapted rules; n <= kMaxEnumerationSteps.
BruteForceResult brute_force_value(const PayoffLattices& payoffs, const StepModel& step);

/// max over all exercise rules, by enumeration (n <= kMaxEnumerationSteps).
double best_holder_response(const PathRule& canceller, const PayoffLattices& payoffs,
                            const StepModel& step);
/// min over all cancellation rules, by enumeration (n <= kMaxEnumerationSteps).
double best_canceller_response(const PathRule& holder, const PayoffLattices& payoffs,
                               const StepModel& step);

/// Game value on every tree node by min/max induction (n <= kMaxPathTreeSteps).
std::vector<double> path_tree_game_value(const PayoffLattices& payoffs, const StepModel& step);

/**
 * Snell envelope of the stopped payoff process G for a fixed cancellation
 * rule: G = Y-hat until the rule has stopped strictly before k, then the
 * cancellation payment frozen at the stopping node.
 */
std::vector<double> path_tree_envelope(const PathRule& canceller, const PayoffLattices& payoffs,
                                       const StepModel& step);

struct PathTreeDoob {
    std::vector<double> martingale;    ///< per tree node
    std::vector<double> compensator;   ///< per tree node
};

/// Doob decomposition by direct summation of conditional increments.
PathTreeDoob path_tree_doob(const std::vector<double>& envelope, const StepModel& step);

}  // namespace gamehedge

#endif  // GAMEHEDGE_PATH_TREE_HPP
