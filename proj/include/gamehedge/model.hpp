/**
 * @file model.hpp
 * @brief Market primitives, the per-step CRR model, the recombining stock
 *        lattice and discounted game-option payoff lattices.
 */

#ifndef GAMEHEDGE_MODEL_HPP
#define GAMEHEDGE_MODEL_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace gamehedge {

/**
 * Black-Scholes market primitives.
 */
struct MarketParams {
    double rate = 0.0;        ///< Continuously compounded riskless rate (1/time)
    double volatility = 0.0;  ///< Volatility kappa (1/sqrt(time))
    double maturity = 0.0;    ///< Horizon T (time)
    double spot = 0.0;        ///< Initial stock price z (currency)

    /// Throws std::invalid_argument unless kappa > 0, T > 0, z > 0, r >= 0
    /// and everything is finite.
    void validate() const;
};

/**
 * Per-step quantities of the n-step CRR market embedded in the Black-Scholes
 * market with increment h = sqrt(T/n).
 *
 * Returns are net: the stock grows by (1 + up_return) or (1 + down_return)
 * over a step, the bond by (1 + step_rate).
 */
struct StepModel {
    std::size_t steps = 0;
    double dt = 0.0;           ///< T/n
    double increment = 0.0;    ///< h = sqrt(T/n)
    double rate = 0.0;         ///< r, kept for discounting
    double step_rate = 0.0;    ///< e^{rT/n} - 1
    double up_return = 0.0;    ///< e^{rT/n + kappa h} - 1
    double down_return = 0.0;  ///< e^{rT/n - kappa h} - 1
    double up_probability = 0.0;  ///< 1 / (e^{kappa h} + 1)
    double log_ratio = 0.0;    ///< kappa h

    /// e^{-r k T/n}
    double discount(std::size_t k) const;
    /// Residual p(up - step) + (1 - p)(down - step) of the martingale condition.
    double martingale_residual() const;
};

/// Throws std::invalid_argument for n = 0 or invalid parameters.
StepModel make_step_model(const MarketParams& params, std::size_t n);

/**
 * Dense storage for values on the nodes (k, j), 0 <= j <= k <= n, of a
 * recombining binomial lattice. j counts up moves.
 */
class NodeLattice {
public:
    NodeLattice() = default;
    explicit NodeLattice(std::size_t steps, double fill = 0.0);

    static std::size_t node_count(std::size_t steps) {
        return (steps + 1) * (steps + 2) / 2;
    }
    static std::size_t index(std::size_t k, std::size_t j) { return k * (k + 1) / 2 + j; }

    std::size_t steps() const { return steps_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t k, std::size_t j) { return data_[index(k, j)]; }
    double operator()(std::size_t k, std::size_t j) const { return data_[index(k, j)]; }

    std::span<double> level(std::size_t k) { return {data_.data() + index(k, 0), k + 1}; }
    std::span<const double> level(std::size_t k) const {
        return {data_.data() + index(k, 0), k + 1};
    }
    std::span<const double> data() const { return data_; }

private:
    std::size_t steps_ = 0;
    std::vector<double> data_;
};

/// Default cap on lattice size.
inline constexpr std::size_t kDefaultMaxNodes = 100'000'000;

/**
 * Recombining CRR stock lattice, S(k, j) = z exp(rTk/n + kappa h (2j - k)).
 */
struct StockLattice {
    std::size_t steps = 0;
    NodeLattice price;       ///< S(k, j), currency
    NodeLattice discounted;  ///< e^{-rTk/n} S(k, j)
};

/// Throws std::length_error if the node count would exceed max_nodes.
StockLattice build_stock_lattice(const StepModel& step, const MarketParams& params,
                                 std::size_t max_nodes = kDefaultMaxNodes);

enum class PayoffKind { Put, Call, Custom };

/**
 * Game option payoff. The holder receives Y(t, s) on exercise; the issuer
 * pays X = Y + penalty(t) on cancellation. Both are given in undiscounted
 * currency as functions of real time so they serve the lattice (t = kT/n)
 * and the continuous-time market alike.
 */
struct GamePayoffSpec {
    PayoffKind kind = PayoffKind::Custom;
    double strike = 0.0;
    std::function<double(double t, double s)> intrinsic;
    std::function<double(double t)> penalty;
    /// Lipschitz constant of the discounted payoffs in the discounted stock.
    double lipschitz = 1.0;

    double holder(double t, double s) const { return intrinsic(t, s); }
    double canceller(double t, double s) const { return intrinsic(t, s) + penalty(t); }
};

GamePayoffSpec game_put(double strike, double penalty);
GamePayoffSpec game_call(double strike, double penalty);

/// Discounted payoffs on the lattice nodes.
struct PayoffLattices {
    NodeLattice holder;     ///< Y-hat
    NodeLattice canceller;  ///< X-hat
};

/// Throws std::domain_error if a payoff is negative or non-finite.
PayoffLattices payoff_lattices(const GamePayoffSpec& spec, const StockLattice& lat,
                               const StepModel& step);

}  // namespace gamehedge

#endif  // GAMEHEDGE_MODEL_HPP
