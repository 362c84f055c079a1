/**
 * @file shortfall.hpp
 * @brief Monte Carlo harness for the hedging shortfall of the lattice hedge
 *        transported into the Black-Scholes market through the embedding.
 *
 * For one Brownian path and one lattice size n the shortfall is
 *
 *   Psi = sup_{0 <= t <= T} ( Q^B(theta_phi, t) - Q^{B,n}(phi, nu_t) )^+
 *
 * with phi the rational cancellation step of the discrete game evaluated on
 * the embedded walk. The supremum runs over the simulation grid.
 */

#ifndef GAMEHEDGE_SHORTFALL_HPP
#define GAMEHEDGE_SHORTFALL_HPP

#include "gamehedge/embedding.hpp"
#include "gamehedge/hedging.hpp"
#include "gamehedge/model.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace gamehedge {

/// Raised when too many paths fail to embed n steps.
class ExperimentAborted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ShortfallSample {
    double psi = 0.0;
    std::size_t cancel_step = 0;  ///< phi (n when unresolved on a truncated path)
    double cancel_time = 0.0;     ///< theta_phi, +inf when unresolved
    bool truncated = false;
};

/// Shortfall of one path against a solved game, with the embedding given.
ShortfallSample shortfall_psi(const BrownianPath& path, const GamePayoffSpec& spec,
                              const MarketParams& params, const GameSolution& game,
                              const EmbeddingTimes& embedding);

/// Same, building the payoff lattices for the supplied cancellation rule.
ShortfallSample shortfall_psi(const BrownianPath& path, const GamePayoffSpec& spec,
                              const MarketParams& params, const StepModel& step,
                              const StoppingRule& canceller);

enum class HolderRuleKind { Fixed, LowerBarrier, UpperBarrier, RationalEmbedded };

/// A holder exercise rule in the continuous market.
struct HolderRule {
    HolderRuleKind kind = HolderRuleKind::Fixed;
    double level = 0.0;  ///< time for Fixed, stock level for barriers
    std::string label;
};

/// Times jT/16 (j = 0..15), first passages of 0.8z, 0.9z, 1.1z, 1.2z (or T
/// if never reached) and the embedded rational exercise rule: 21 rules.
std::vector<HolderRule> default_holder_family(const MarketParams& params);

struct ShortfallConfig {
    std::vector<std::size_t> steps;  ///< n values, ascending and distinct
    std::size_t paths = 0;           ///< N
    std::size_t grid = 0;            ///< m, grid steps per horizon
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    /// Paths are simulated past T, up to this multiple of T, until n
    /// crossings are found.
    double horizon_cap = 4.0;
    bool with_gap = true;
    double max_truncated_fraction = 0.01;
};

struct GapStatistics {
    std::vector<std::string> labels;
    std::vector<double> mean;            ///< mean (Q^B - Z)^+ per rule
    std::vector<double> standard_error;
    std::size_t worst = 0;               ///< rule with the largest mean

    double max() const { return mean.empty() ? 0.0 : mean[worst]; }
    double max_se() const { return mean.empty() ? 0.0 : standard_error[worst]; }
};

struct ShortfallRow {
    std::size_t steps = 0;
    std::size_t paths = 0;
    double mean_psi = 0.0;
    double se_psi = 0.0;
    double c_fit = 0.0;  ///< mean_psi n^{1/4}
    std::size_t truncated_paths = 0;
    bool coarse_grid = false;
    double price = 0.0;  ///< lattice game value V(0,0)
    GapStatistics gap;   ///< empty when gaps are not requested
};

struct ShortfallReport {
    std::vector<ShortfallRow> rows;
    double slope_fit = 0.0;  ///< least-squares slope of log mean_psi against log n
    double c_fit = 0.0;      ///< max over rows of mean_psi n^{1/4}
};

/// Throws ExperimentAborted when more than max_truncated_fraction of the
/// paths fail to embed n steps within the horizon cap.
ShortfallReport estimate_mean_shortfall(const GamePayoffSpec& spec, const MarketParams& params,
                                        const ShortfallConfig& config);

/// Gap statistics of one solved game for the given holder rules; uses the
/// mc fields of config (its steps list is ignored).
GapStatistics hedging_gap(const GamePayoffSpec& spec, const MarketParams& params,
                          const GameSolution& game, const std::vector<HolderRule>& family,
                          const ShortfallConfig& config);

/// Least-squares slope of log(y) on log(x); NaN with fewer than two points or
/// non-positive values.
double fit_log_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Columns: n, N, mean_psi, se_psi, slope_fit, c_fit, gap_max, gap_se, truncated_paths.
void write_shortfall_csv(std::ostream& out, const ShortfallReport& report);

}  // namespace gamehedge

#endif  // GAMEHEDGE_SHORTFALL_HPP
