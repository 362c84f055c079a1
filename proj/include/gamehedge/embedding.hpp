/**
 * @file embedding.hpp
 * @brief Brownian paths, embedding of the CRR walk through successive hitting
 *        times, and the continuous-time game payoff read off a path.
 *
 * Simulation measure: W is standard Brownian motion and
 * B*_t = W_t - (kappa/2) t, so S_t = z exp(rt + kappa B*_t) is the
 * risk-neutral Black-Scholes stock and the embedded walk moves up with
 * probability 1/(e^{kappa h} + 1).
 */

#ifndef GAMEHEDGE_EMBEDDING_HPP
#define GAMEHEDGE_EMBEDDING_HPP

#include "gamehedge/model.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

namespace gamehedge {

/// Largest supported number of grid points in a single path.
inline constexpr std::size_t kMaxPathPoints = std::size_t{1} << 28;

/**
 * Brownian path on the uniform grid t_i = i T/m. The path may extend past
 * the horizon T (i > m) so that late hitting times can be resolved.
 */
struct BrownianPath {
    double maturity = 0.0;
    double volatility = 0.0;
    std::size_t grid = 0;  ///< m, steps per horizon
    double dt = 0.0;
    std::vector<double> w;
    std::vector<double> bstar;

    std::size_t points() const { return w.size(); }
    double time(std::size_t i) const { return dt * static_cast<double>(i); }
    double end_time() const { return time(points() - 1); }
    /// Linear interpolation of B* at time t within the simulated range.
    double bstar_at(double t) const;
};

/**
 * Reproducible increment stream for one path: the engine is keyed on
 * (seed, path index) only, so a path never depends on how work is split
 * across threads.
 */
class BrownianStream {
public:
    BrownianStream(double maturity, double volatility, std::size_t grid, std::uint64_t seed,
                   std::uint64_t path_index);

    /// A path holding only the origin.
    BrownianPath start() const;
    /// Appends increments until the path holds `points` grid points.
    void extend(BrownianPath& path, std::size_t points);
    /// Next B* increment, for callers that do not store the path.
    double next_bstar_increment();

private:
    double maturity_;
    double volatility_;
    std::size_t grid_;
    double dt_;
    double sqrt_dt_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_;
};

/// Path on [0, horizon_factor T] with m steps per T. Volatility may be zero here.
BrownianPath sample_path(const MarketParams& params, std::size_t m, std::uint64_t seed,
                         std::uint64_t path_index = 0, double horizon_factor = 1.0);

/**
 * Hitting times theta_k: theta_k is the first time |B*_t - B*_{theta_{k-1}}|
 * reaches h, found on the grid and refined by linear interpolation. The
 * reference level after each crossing is snapped to the barrier, so the k-th
 * embedded node carries exactly the lattice stock.
 */
struct EmbeddingTimes {
    std::size_t steps = 0;       ///< n requested
    double increment = 0.0;      ///< h
    std::vector<double> theta;   ///< theta_0 = 0, then one entry per crossing
    std::vector<int> xi;         ///< signs of the embedded increments
    std::vector<std::size_t> up_count;  ///< ups among xi_1..xi_k, k = 0..crossings
    bool truncated = false;      ///< fewer than n crossings on the simulated range
    bool coarse_grid = false;    ///< dt > h^2 / 16
    double max_overshoot = 0.0;  ///< largest grid overshoot beyond a barrier

    std::size_t crossings() const { return xi.size(); }
    /// min{k : theta_k >= t}, frozen at the last resolved crossing.
    std::size_t nu(double t) const;
};

EmbeddingTimes embed_times(const BrownianPath& path, const StepModel& step);

/**
 * Discounted continuous-time game payment for cancellation at s and exercise
 * at t: e^{-rs}(Y(s, S_s) + delta(s)) if s < t, else e^{-rt} Y(t, S_t).
 * Times must lie in [0, T]; values between grid points are interpolated.
 */
double continuous_game_payoff(const BrownianPath& path, const GamePayoffSpec& spec,
                              const MarketParams& params, double s, double t);

/// Discounted stock e^{-rt} S_t = z exp(kappa B*_t).
double discounted_stock_at(const BrownianPath& path, const MarketParams& params, double t);

struct GoldenPath {
    std::uint64_t grid = 0;
    double maturity = 0.0;
    std::uint64_t seed = 0;
    std::vector<double> w;
};

/// Binary fixture: u64 m, f64 T, u64 seed, then raw f64 values of w (host byte order).
void write_golden_path(const std::filesystem::path& file, const BrownianPath& path,
                       std::uint64_t seed);
GoldenPath read_golden_path(const std::filesystem::path& file);
/// Rebuilds B* for the stored w with the given volatility.
BrownianPath path_from_golden(const GoldenPath& golden, double volatility);

struct SignFrequency {
    std::size_t paths = 0;
    double frequency = 0.0;  ///< empirical P(xi_1 = +1)
    double standard_error = 0.0;
    double expected = 0.0;   ///< 1/(e^{kappa h} + 1)
};

/// First embedded sign over `paths` independent streams (grid m per horizon).
SignFrequency embedded_sign_frequency(const MarketParams& params, std::size_t n,
                                      std::size_t paths, std::size_t m, std::uint64_t seed,
                                      std::size_t threads);

}  // namespace gamehedge

#endif  // GAMEHEDGE_EMBEDDING_HPP
