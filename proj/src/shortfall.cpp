/**
 * @file shortfall.cpp
 * @brief Shortfall and hedging-gap Monte Carlo
 */

#include "gamehedge/shortfall.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace gamehedge {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Grid quantities shared by every path.
struct GridCache {
    std::size_t grid = 0;
    double dt = 0.0;
    std::vector<double> time;
    std::vector<double> growth;  // e^{r t_i}
};

GridCache make_cache(const MarketParams& params, std::size_t grid) {
    GridCache c;
    c.grid = grid;
    c.dt = params.maturity / static_cast<double>(grid);
    c.time.resize(grid + 1);
    c.growth.resize(grid + 1);
    for (std::size_t i = 0; i <= grid; ++i) {
        c.time[i] = c.dt * static_cast<double>(i);
        c.growth[i] = std::exp(params.rate * c.time[i]);
    }
    c.time[grid] = params.maturity;
    return c;
}

// Per-path continuous quantities on [0, T].
struct PathView {
    const BrownianPath* path = nullptr;
    std::vector<double> stock;   // S_i
    std::vector<double> holder;  // e^{-r t_i} Y(t_i, S_i)
};

void fill_view(PathView& view, const BrownianPath& path, const GamePayoffSpec& spec,
               const MarketParams& params, const GridCache& cache) {
    view.path = &path;
    const std::size_t points = cache.grid + 1;
    view.stock.resize(points);
    view.holder.resize(points);
    for (std::size_t i = 0; i < points; ++i) {
        const double s = params.spot * std::exp(params.volatility * path.bstar[i]) * cache.growth[i];
        view.stock[i] = s;
        view.holder[i] = spec.holder(cache.time[i], s) / cache.growth[i];
    }
}

double holder_payment_at(const BrownianPath& path, const GamePayoffSpec& spec,
                         const MarketParams& params, double t) {
    const double growth = std::exp(params.rate * t);
    const double s = params.spot * std::exp(params.volatility * path.bstar_at(t)) * growth;
    return spec.holder(t, s) / growth;
}

double cancel_payment_at(const BrownianPath& path, const GamePayoffSpec& spec,
                         const MarketParams& params, double t) {
    const double growth = std::exp(params.rate * t);
    const double s = params.spot * std::exp(params.volatility * path.bstar_at(t)) * growth;
    return spec.canceller(t, s) / growth;
}

// Discrete cancellation step phi on the embedded walk.
struct CancelStep {
    std::size_t step = 0;
    bool resolved = false;
    double time = kInf;
};

CancelStep locate_cancellation(const StoppingRule& canceller, const EmbeddingTimes& e,
                               std::size_t n) {
    const std::size_t last = std::min(e.crossings(), n);
    for (std::size_t k = 0; k <= last; ++k) {
        if (k == n || canceller.stops_at(k, e.up_count[k])) return {k, true, e.theta[k]};
    }
    return {n, false, kInf};
}

double psi_kernel(const PathView& view, const GamePayoffSpec& spec, const MarketParams& params,
                  const GridCache& cache, const PayoffLattices& payoffs,
                  const EmbeddingTimes& e, const CancelStep& phi) {
    const std::size_t n = e.steps;
    const std::size_t last = std::min(e.crossings(), n);
    const double horizon = params.maturity;
    const double s = std::min(phi.time, horizon);
    const double cont_cancel = s < horizon ? cancel_payment_at(*view.path, spec, params, s) : 0.0;
    const double disc_cancel =
        phi.resolved ? payoffs.canceller(phi.step, e.up_count[phi.step]) : 0.0;

    double psi = 0.0;
    std::size_t k = 0;
    for (std::size_t i = 0; i <= cache.grid; ++i) {
        const double t = cache.time[i];
        while (k < last && e.theta[k] < t) ++k;
        const double discrete =
            (phi.resolved && phi.step < k) ? disc_cancel : payoffs.holder(k, e.up_count[k]);
        const double continuous = s < t ? cont_cancel : view.holder[i];
        psi = std::max(psi, continuous - discrete);
    }
    return psi;
}

// Discounted portfolio values at the embedded steps, trading stopped at phi.
void embedded_portfolio(const GameSolution& game, const EmbeddingTimes& e, const CancelStep& phi,
                        std::vector<double>& z) {
    const std::size_t n = e.steps;
    const std::size_t last = std::min(e.crossings(), n);
    z.assign(last + 1, 0.0);
    z[0] = game.plan.initial_capital;
    for (std::size_t k = 0; k < last; ++k) {
        const std::size_t j = e.up_count[k];
        const std::size_t next = e.up_count[k + 1];
        const bool active = !phi.resolved || k < phi.step;
        const double units = active ? game.plan.gamma(k, j) : 0.0;
        z[k + 1] = z[k] + units * (game.lattice.discounted(k + 1, next) - game.lattice.discounted(k, j));
    }
}

double holder_time(const HolderRule& rule, const PathView& view, const GridCache& cache,
                   const GameSolution& game, const EmbeddingTimes& e, double horizon) {
    switch (rule.kind) {
        case HolderRuleKind::Fixed:
            return std::clamp(rule.level, 0.0, horizon);
        case HolderRuleKind::LowerBarrier:
            for (std::size_t i = 0; i <= cache.grid; ++i) {
                if (view.stock[i] <= rule.level) return cache.time[i];
            }
            return horizon;
        case HolderRuleKind::UpperBarrier:
            for (std::size_t i = 0; i <= cache.grid; ++i) {
                if (view.stock[i] >= rule.level) return cache.time[i];
            }
            return horizon;
        case HolderRuleKind::RationalEmbedded: {
            const std::size_t n = e.steps;
            const std::size_t last = std::min(e.crossings(), n);
            for (std::size_t k = 0; k <= last; ++k) {
                if (k == n || game.rules.holder.stops_at(k, e.up_count[k])) {
                    return std::min(e.theta[k], horizon);
                }
            }
            return horizon;
        }
    }
    return horizon;
}

void gap_kernel(const PathView& view, const GamePayoffSpec& spec, const MarketParams& params,
                const GridCache& cache, const GameSolution& game, const EmbeddingTimes& e,
                const CancelStep& phi, const std::vector<HolderRule>& family,
                std::vector<double>& z, double* gaps) {
    const std::size_t n = e.steps;
    const std::size_t last = std::min(e.crossings(), n);
    const double horizon = params.maturity;
    const double s = std::min(phi.time, horizon);
    embedded_portfolio(game, e, phi, z);
    const double cont_cancel = s < horizon ? cancel_payment_at(*view.path, spec, params, s) : 0.0;

    for (std::size_t r = 0; r < family.size(); ++r) {
        const double tau = holder_time(family[r], view, cache, game, e, horizon);
        const double u = std::min(s, tau);
        const double payment =
            s < tau ? cont_cancel : holder_payment_at(*view.path, spec, params, tau);

        // Last embedded step strictly before u; positions are fixed after it.
        std::size_t kk = 0;
        while (kk < last && e.theta[kk + 1] < u) ++kk;
        const std::size_t j = e.up_count[kk];
        const bool active = kk < n && (!phi.resolved || kk < phi.step);
        double value = z[kk];
        if (active && u > 0.0) {
            value += game.plan.gamma(kk, j) *
                     (discounted_stock_at(*view.path, params, u) - game.lattice.discounted(kk, j));
        }
        gaps[r] = std::max(payment - value, 0.0);
    }
}

void check_config(const ShortfallConfig& config, bool need_steps) {
    if (need_steps && config.steps.empty()) {
        throw std::invalid_argument("Step list must not be empty");
    }
    for (std::size_t i = 0; i < config.steps.size(); ++i) {
        if (config.steps[i] == 0) throw std::invalid_argument("Step counts must be positive");
        if (i > 0 && config.steps[i] <= config.steps[i - 1]) {
            throw std::invalid_argument("Step list must be ascending and distinct");
        }
    }
    if (config.paths < 100) throw std::invalid_argument("Need at least 100 paths");
    if (config.grid == 0) throw std::invalid_argument("Grid size must be positive");
    if (!(config.horizon_cap >= 1.0) || !std::isfinite(config.horizon_cap)) {
        throw std::invalid_argument("Horizon cap must be at least 1");
    }
}

struct GameRun {
    const GameSolution* game = nullptr;
    std::vector<double> psi;      // [path]
    std::vector<double> gaps;     // [path * rules + r]
    std::vector<std::uint8_t> truncated;
    bool coarse = false;
};

void run_paths(const GamePayoffSpec& spec, const MarketParams& params, const ShortfallConfig& config,
               const std::vector<HolderRule>& family, std::vector<GameRun>& runs) {
    const auto cache = make_cache(params, config.grid);
    const std::size_t cap_points = static_cast<std::size_t>(
        std::round(config.horizon_cap * static_cast<double>(config.grid))) + 1;
    const std::size_t chunk = config.grid / 4 + 1;
    const std::size_t rules = family.size();
    for (auto& run : runs) {
        run.psi.assign(config.paths, 0.0);
        run.truncated.assign(config.paths, 0);
        if (config.with_gap) run.gaps.assign(config.paths * rules, 0.0);
    }

    detail::parallel_for(config.paths, config.threads, [&](std::size_t begin, std::size_t end) {
        PathView view;
        std::vector<double> z;
        for (std::size_t p = begin; p < end; ++p) {
            BrownianStream stream(params.maturity, params.volatility, config.grid, config.seed, p);
            auto path = stream.start();
            stream.extend(path, config.grid + 1);
            fill_view(view, path, spec, params, cache);
            for (auto& run : runs) {
                const auto& game = *run.game;
                auto e = embed_times(path, game.step);
                while (e.truncated && path.points() < cap_points) {
                    stream.extend(path, std::min(cap_points, path.points() + chunk));
                    view.path = &path;
                    e = embed_times(path, game.step);
                }
                const auto phi = locate_cancellation(game.rules.canceller, e, game.step.steps);
                run.psi[p] = psi_kernel(view, spec, params, cache, game.payoffs, e, phi);
                run.truncated[p] = e.truncated ? 1 : 0;
                if (config.with_gap) {
                    gap_kernel(view, spec, params, cache, game, e, phi, family, z,
                               &run.gaps[p * rules]);
                }
            }
        }
    });

    for (auto& run : runs) {
        const double h = run.game->step.increment;
        run.coarse = cache.dt > h * h / 16.0;
    }
}

GapStatistics summarize_gaps(const GameRun& run, const std::vector<HolderRule>& family,
                             std::size_t paths) {
    GapStatistics g;
    const std::size_t rules = family.size();
    std::vector<double> column(paths);
    for (std::size_t r = 0; r < rules; ++r) {
        for (std::size_t p = 0; p < paths; ++p) column[p] = run.gaps[p * rules + r];
        const auto est = detail::mean_and_se(column);
        g.labels.push_back(family[r].label);
        g.mean.push_back(est.mean);
        g.standard_error.push_back(est.standard_error);
        if (est.mean > g.mean[g.worst]) g.worst = r;
    }
    return g;
}

std::size_t count_truncated(const GameRun& run) {
    return static_cast<std::size_t>(std::count(run.truncated.begin(), run.truncated.end(), 1));
}

void check_truncation(const GameRun& run, const ShortfallConfig& config) {
    const auto truncated = count_truncated(run);
    if (static_cast<double>(truncated) >
        config.max_truncated_fraction * static_cast<double>(config.paths)) {
        throw ExperimentAborted("Too many truncated embeddings for n = " +
                                std::to_string(run.game->step.steps) + ": " +
                                std::to_string(truncated) + " of " +
                                std::to_string(config.paths) + " paths");
    }
}

}  // namespace

ShortfallSample shortfall_psi(const BrownianPath& path, const GamePayoffSpec& spec,
                              const MarketParams& params, const GameSolution& game,
                              const EmbeddingTimes& embedding) {
    if (path.end_time() < params.maturity * (1.0 - 1e-12)) {
        throw std::invalid_argument("Path must cover [0, T]");
    }
    if (std::abs(path.dt * static_cast<double>(path.grid) - params.maturity) >
        1e-12 * params.maturity) {
        throw std::invalid_argument("Path grid does not match the maturity");
    }
    const auto cache = make_cache(params, path.grid);
    PathView view;
    fill_view(view, path, spec, params, cache);
    const auto phi = locate_cancellation(game.rules.canceller, embedding, game.step.steps);
    ShortfallSample out;
    out.psi = psi_kernel(view, spec, params, cache, game.payoffs, embedding, phi);
    out.cancel_step = phi.step;
    out.cancel_time = phi.time;
    out.truncated = embedding.truncated;
    return out;
}

ShortfallSample shortfall_psi(const BrownianPath& path, const GamePayoffSpec& spec,
                              const MarketParams& params, const StepModel& step,
                              const StoppingRule& canceller) {
    if (canceller.steps() != step.steps) {
        throw std::invalid_argument("Cancellation rule does not match the step model");
    }
    GameSolution game;
    game.params = params;
    game.step = step;
    game.lattice = build_stock_lattice(step, params);
    game.payoffs = payoff_lattices(spec, game.lattice, step);
    game.rules.canceller = canceller;
    return shortfall_psi(path, spec, params, game, embed_times(path, step));
}

std::vector<HolderRule> default_holder_family(const MarketParams& params) {
    std::vector<HolderRule> family;
    for (int j = 0; j < 16; ++j) {
        std::ostringstream label;
        label << "time_" << j << "/16";
        family.push_back({HolderRuleKind::Fixed, params.maturity * j / 16.0, label.str()});
    }
    family.push_back({HolderRuleKind::LowerBarrier, 0.8 * params.spot, "barrier_0.8"});
    family.push_back({HolderRuleKind::LowerBarrier, 0.9 * params.spot, "barrier_0.9"});
    family.push_back({HolderRuleKind::UpperBarrier, 1.1 * params.spot, "barrier_1.1"});
    family.push_back({HolderRuleKind::UpperBarrier, 1.2 * params.spot, "barrier_1.2"});
    family.push_back({HolderRuleKind::RationalEmbedded, 0.0, "rational_exercise"});
    return family;
}

double fit_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) return std::numeric_limits<double>::quiet_NaN();
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

ShortfallReport estimate_mean_shortfall(const GamePayoffSpec& spec, const MarketParams& params,
                                        const ShortfallConfig& config) {
    params.validate();
    check_config(config, true);
    const auto family = default_holder_family(params);

    std::vector<GameSolution> games;
    games.reserve(config.steps.size());
    for (std::size_t n : config.steps) games.push_back(solve_game(spec, params, n));
    std::vector<GameRun> runs(games.size());
    for (std::size_t i = 0; i < games.size(); ++i) runs[i].game = &games[i];

    run_paths(spec, params, config, family, runs);

    ShortfallReport report;
    std::vector<double> ns;
    std::vector<double> means;
    for (const auto& run : runs) {
        check_truncation(run, config);
        ShortfallRow row;
        row.steps = run.game->step.steps;
        row.paths = config.paths;
        const auto est = detail::mean_and_se(run.psi);
        row.mean_psi = est.mean;
        row.se_psi = est.standard_error;
        row.c_fit = est.mean * std::pow(static_cast<double>(row.steps), 0.25);
        row.truncated_paths = count_truncated(run);
        row.coarse_grid = run.coarse;
        row.price = run.game->value(0, 0);
        if (config.with_gap) row.gap = summarize_gaps(run, family, config.paths);
        ns.push_back(static_cast<double>(row.steps));
        means.push_back(row.mean_psi);
        report.c_fit = std::max(report.c_fit, row.c_fit);
        report.rows.push_back(std::move(row));
    }
    report.slope_fit = fit_log_slope(ns, means);
    return report;
}

GapStatistics hedging_gap(const GamePayoffSpec& spec, const MarketParams& params,
                          const GameSolution& game, const std::vector<HolderRule>& family,
                          const ShortfallConfig& config) {
    params.validate();
    check_config(config, false);
    ShortfallConfig mc = config;
    mc.with_gap = true;
    std::vector<GameRun> runs(1);
    runs[0].game = &game;
    run_paths(spec, params, mc, family, runs);
    check_truncation(runs[0], mc);
    return summarize_gaps(runs[0], family, mc.paths);
}

void write_shortfall_csv(std::ostream& out, const ShortfallReport& report) {
    out << "n,N,mean_psi,se_psi,slope_fit,c_fit,gap_max,gap_se,truncated_paths\n";
    std::ostringstream line;
    line << std::setprecision(17);
    for (const auto& row : report.rows) {
        line.str("");
        line << row.steps << ',' << row.paths << ',' << row.mean_psi << ',' << row.se_psi << ','
             << report.slope_fit << ',' << row.c_fit << ',';
        if (!row.gap.mean.empty()) line << row.gap.max() << ',' << row.gap.max_se();
        else line << ',';
        line << ',' << row.truncated_paths << '\n';
        out << line.str();
    }
}

}  // namespace gamehedge
