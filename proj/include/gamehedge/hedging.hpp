/**
 * @file hedging.hpp
 * @brief Issuer hedge of a game option on the CRR lattice: Doob decomposition
 *        of the one-sided envelope, martingale representation coefficients,
 *        hedge ratios, portfolio paths and superhedging audits.
 *
 * Everything is in discounted units. The envelope is treated as a process
 * stopped at its absorbing nodes (the cancellation rule), so the martingale
 * and compensator are path functionals; the lattices below store their
 * one-step increments, which are node functions.
 */

#ifndef GAMEHEDGE_HEDGING_HPP
#define GAMEHEDGE_HEDGING_HPP

#include "gamehedge/dynkin.hpp"
#include "gamehedge/model.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace gamehedge {

struct DoobDecomposition {
    ValueLattice envelope;          ///< U, with absorbing nodes
    NodeLattice compensator_step;   ///< A_{k+1} - A_k at node (k, j); zero at absorbing nodes
    NodeLattice martingale_up;      ///< M_{k+1} - M_k towards (k+1, j+1)
    NodeLattice martingale_down;    ///< M_{k+1} - M_k towards (k+1, j)

    std::size_t steps() const { return envelope.steps(); }
    double initial_value() const { return envelope(0, 0); }

    /// M_0..M_n along a path of +1/-1 moves; constant after an absorbing node.
    std::vector<double> martingale_along(std::span<const int> moves) const;
    /// A_0..A_n along a path (the withdrawal stream of a consuming hedger).
    std::vector<double> compensator_along(std::span<const int> moves) const;
};

/// Throws std::domain_error if the input fails the supermartingale property
/// by more than 1e-10 times the largest envelope value (or 1e-10 when that is
/// below one).
DoobDecomposition doob_decompose(const ValueLattice& envelope, const StepModel& step);

/**
 * Representation coefficient of the martingale increment over step k, stored
 * at the predecessor node (k-1, j):
 *   alpha = e^{-rT/n} (e^{kappa h} - 1)^{-1} (1 - p) (U(k, j+1) - U(k, j)).
 * With it M_k - M_{k-1} = alpha (rho_k - r^(n)) on both branches.
 * Zero at absorbing nodes.
 */
NodeLattice representation_alpha(const ValueLattice& envelope, const StepModel& step);

struct HedgePlan {
    std::size_t steps = 0;
    NodeLattice alpha;   ///< per predecessor node
    NodeLattice gamma;   ///< stock units held over the next step (signed)
    std::vector<std::uint8_t> absorbing;
    double initial_capital = 0.0;  ///< discounted

    bool is_absorbing(std::size_t k, std::size_t j) const {
        return !absorbing.empty() && absorbing[NodeLattice::index(k, j)] != 0;
    }
    /// Bond units (bond account e^{rt}) held at node (k, j) by a portfolio of
    /// discounted value `portfolio_value`.
    double bond_units(const StockLattice& lat, std::size_t k, std::size_t j,
                      double portfolio_value) const {
        return portfolio_value - gamma(k, j) * lat.discounted(k, j);
    }
};

/// gamma = alpha e^{rTk/n} / S(k-1, j).
HedgePlan hedge_ratios(const NodeLattice& alpha, const StockLattice& lat, const StepModel& step,
                       const ValueLattice& envelope);

/// Discounted portfolio values Z_0..Z_n along a path of +1/-1 moves. Trading
/// stops at the first absorbing node.
std::vector<double> portfolio_trajectory(const HedgePlan& plan, std::span<const int> moves,
                                         const StepModel& step, const StockLattice& lat);

/// Exactness residuals and bound checks of a hedge (absolute, discounted).
struct HedgeAudit {
    double representation_residual = 0.0;  ///< max |dM - alpha (rho - r^(n))|
    double self_financing_residual = 0.0;   ///< max |dM - gamma (dS-hat)|
    double martingale_residual = 0.0;       ///< max |p dM_up + (1 - p) dM_down|
    double predictability_residual = 0.0;   ///< max |dA on up branch - dA on down branch|
    double min_compensator_step = 0.0;      ///< min A_{k+1} - A_k
    double max_abs_gamma = 0.0;
    double max_alpha_ratio = 0.0;           ///< max |alpha| / (C S-hat(k-1, j))
    double initial_capital = 0.0;
    /// The same residuals divided by the node scale max(S-hat(k, j), |U(k, j)|).
    double representation_relative = 0.0;
    double self_financing_relative = 0.0;
    double martingale_relative = 0.0;
    double predictability_relative = 0.0;
};

HedgeAudit audit_hedge(const DoobDecomposition& doob, const HedgePlan& plan,
                       const StockLattice& lat, const StepModel& step, double lipschitz);

struct SuperhedgeReport {
    double worst_margin = 0.0;         ///< min over nodes of U - G
    std::size_t worst_step = 0;
    std::size_t worst_node = 0;
    double min_compensator_step = 0.0; ///< A nondecreasing iff >= 0
    bool dominated = false;            ///< both quantities within tolerance
};

/**
 * Nodewise certificate Z = M >= U >= G for the cancellation rule's game,
 * where G is X-hat at cancellation nodes and Y-hat elsewhere. Failures are
 * reported, not thrown.
 */
SuperhedgeReport verify_superhedge(const HedgePlan& plan, const DoobDecomposition& doob,
                                   const PayoffLattices& payoffs, const StoppingRule& canceller,
                                   double tolerance);

/// Exhaustive version for n <= 4: min over every adapted exercise rule and
/// every path of Z at (cancel ^ exercise) minus the game payment.
double exhaustive_superhedge_margin(const HedgePlan& plan, const PayoffLattices& payoffs,
                                    const StoppingRule& canceller, const StepModel& step,
                                    const StockLattice& lat);

/// Everything needed to price and hedge one game option on an n-step lattice.
struct GameSolution {
    MarketParams params;
    StepModel step;
    StockLattice lattice;
    PayoffLattices payoffs;
    ValueLattice value;       ///< Dynkin value
    RationalRules rules;
    DoobDecomposition doob;   ///< of the envelope against the rational cancellation rule
    HedgePlan plan;
};

/// Stopping equality tolerance is kStoppingTolerance times the spot.
GameSolution solve_game(const GamePayoffSpec& spec, const MarketParams& params, std::size_t n);

}  // namespace gamehedge

#endif  // GAMEHEDGE_HEDGING_HPP
