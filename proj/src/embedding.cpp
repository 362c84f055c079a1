/**
 * @file embedding.cpp
 * @brief Brownian paths, hitting-time embedding and continuous payoffs
 */

#include "gamehedge/embedding.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

namespace gamehedge {

namespace {

void check_path_inputs(double maturity, double volatility, std::size_t grid) {
    if (!std::isfinite(maturity) || maturity <= 0.0) {
        throw std::invalid_argument("Maturity must be positive and finite");
    }
    if (!std::isfinite(volatility) || volatility < 0.0) {
        throw std::invalid_argument("Volatility must be non-negative and finite");
    }
    if (grid == 0) throw std::invalid_argument("Grid size must be at least 1");
    if (grid >= kMaxPathPoints) throw std::length_error("Grid size exceeds the path limit");
}

}  // namespace

double BrownianPath::bstar_at(double t) const {
    if (points() == 0) throw std::logic_error("Empty path");
    if (!(t >= 0.0) || t > end_time()) {
        throw std::out_of_range("Time outside the simulated path");
    }
    const double x = t / dt;
    auto i = static_cast<std::size_t>(x);
    if (i >= points() - 1) return bstar.back();
    const double frac = x - static_cast<double>(i);
    return bstar[i] + frac * (bstar[i + 1] - bstar[i]);
}

BrownianStream::BrownianStream(double maturity, double volatility, std::size_t grid,
                               std::uint64_t seed, std::uint64_t path_index)
    : maturity_(maturity),
      volatility_(volatility),
      grid_(grid),
      dt_(maturity / static_cast<double>(grid)),
      sqrt_dt_(std::sqrt(maturity / static_cast<double>(grid))) {
    check_path_inputs(maturity, volatility, grid);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(path_index),
                      static_cast<std::uint32_t>(path_index >> 32)};
    engine_.seed(seq);
}

BrownianPath BrownianStream::start() const {
    BrownianPath path;
    path.maturity = maturity_;
    path.volatility = volatility_;
    path.grid = grid_;
    path.dt = dt_;
    path.w.push_back(0.0);
    path.bstar.push_back(0.0);
    return path;
}

void BrownianStream::extend(BrownianPath& path, std::size_t points) {
    if (points > kMaxPathPoints) throw std::length_error("Path exceeds the point limit");
    if (path.points() == 0) throw std::logic_error("Path must start from the origin");
    path.w.reserve(points);
    path.bstar.reserve(points);
    const double drift = 0.5 * volatility_;
    while (path.points() < points) {
        const double w = path.w.back() + sqrt_dt_ * normal_(engine_);
        const double t = dt_ * static_cast<double>(path.points());
        path.w.push_back(w);
        path.bstar.push_back(volatility_ == 0.0 ? w : w - drift * t);
    }
}

double BrownianStream::next_bstar_increment() {
    return sqrt_dt_ * normal_(engine_) - 0.5 * volatility_ * dt_;
}

BrownianPath sample_path(const MarketParams& params, std::size_t m, std::uint64_t seed,
                         std::uint64_t path_index, double horizon_factor) {
    if (!(horizon_factor >= 1.0) || !std::isfinite(horizon_factor)) {
        throw std::invalid_argument("Horizon factor must be at least 1");
    }
    check_path_inputs(params.maturity, params.volatility, m);
    const double points = std::round(horizon_factor * static_cast<double>(m)) + 1.0;
    if (points > static_cast<double>(kMaxPathPoints)) {
        throw std::length_error("Path exceeds the point limit");
    }
    BrownianStream stream(params.maturity, params.volatility, m, seed, path_index);
    auto path = stream.start();
    stream.extend(path, static_cast<std::size_t>(points));
    return path;
}

std::size_t EmbeddingTimes::nu(double t) const {
    const auto it = std::lower_bound(theta.begin(), theta.end(), t);
    if (it == theta.end()) return crossings();
    return static_cast<std::size_t>(it - theta.begin());
}

EmbeddingTimes embed_times(const BrownianPath& path, const StepModel& step) {
    const std::size_t n = step.steps;
    const double h = step.increment;
    EmbeddingTimes out;
    out.steps = n;
    out.increment = h;
    out.coarse_grid = path.dt > h * h / 16.0;
    out.theta.reserve(n + 1);
    out.xi.reserve(n);
    out.up_count.reserve(n + 1);
    out.theta.push_back(0.0);
    out.up_count.push_back(0);

    std::size_t ups = 0;
    double anchor = 0.0;
    const auto& b = path.bstar;
    for (std::size_t i = 1; i < b.size() && out.xi.size() < n; ++i) {
        const double prev = b[i - 1];
        const double cur = b[i];
        while (out.xi.size() < n && std::abs(cur - anchor) >= h) {
            const int sign = cur > anchor ? 1 : -1;
            const double level = anchor + sign * h;
            out.max_overshoot = std::max(out.max_overshoot, std::abs(cur - anchor) - h);
            const double frac = (level - prev) / (cur - prev);
            const double t = path.time(i - 1) + std::clamp(frac, 0.0, 1.0) * path.dt;
            out.theta.push_back(std::max(t, out.theta.back()));
            out.xi.push_back(sign);
            if (sign > 0) ++ups;
            out.up_count.push_back(ups);
            const auto k = static_cast<double>(out.xi.size());
            anchor = h * (2.0 * static_cast<double>(ups) - k);
        }
    }
    out.truncated = out.xi.size() < n;
    return out;
}

double discounted_stock_at(const BrownianPath& path, const MarketParams& params, double t) {
    return params.spot * std::exp(params.volatility * path.bstar_at(t));
}

double continuous_game_payoff(const BrownianPath& path, const GamePayoffSpec& spec,
                              const MarketParams& params, double s, double t) {
    const double horizon = params.maturity;
    if (!(s >= 0.0) || !(t >= 0.0) || s > horizon || t > horizon) {
        throw std::out_of_range("Payoff times must lie in [0, T]");
    }
    if (s < t) {
        const double stock = std::exp(params.rate * s) * discounted_stock_at(path, params, s);
        return std::exp(-params.rate * s) * spec.canceller(s, stock);
    }
    const double stock = std::exp(params.rate * t) * discounted_stock_at(path, params, t);
    return std::exp(-params.rate * t) * spec.holder(t, stock);
}

void write_golden_path(const std::filesystem::path& file, const BrownianPath& path,
                       std::uint64_t seed) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("Cannot open " + file.string() + " for writing");
    const std::uint64_t grid = path.grid;
    const double maturity = path.maturity;
    out.write(reinterpret_cast<const char*>(&grid), sizeof grid);
    out.write(reinterpret_cast<const char*>(&maturity), sizeof maturity);
    out.write(reinterpret_cast<const char*>(&seed), sizeof seed);
    out.write(reinterpret_cast<const char*>(path.w.data()),
              static_cast<std::streamsize>(path.w.size() * sizeof(double)));
    if (!out) throw std::runtime_error("Failed writing " + file.string());
}

GoldenPath read_golden_path(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("Cannot open " + file.string());
    const auto size = std::filesystem::file_size(file);
    constexpr std::size_t header = 2 * sizeof(std::uint64_t) + sizeof(double);
    if (size < header || (size - header) % sizeof(double) != 0) {
        throw std::runtime_error("Malformed golden path file " + file.string());
    }
    GoldenPath g;
    in.read(reinterpret_cast<char*>(&g.grid), sizeof g.grid);
    in.read(reinterpret_cast<char*>(&g.maturity), sizeof g.maturity);
    in.read(reinterpret_cast<char*>(&g.seed), sizeof g.seed);
    g.w.resize((size - header) / sizeof(double));
    in.read(reinterpret_cast<char*>(g.w.data()),
            static_cast<std::streamsize>(g.w.size() * sizeof(double)));
    if (!in) throw std::runtime_error("Failed reading " + file.string());
    return g;
}

BrownianPath path_from_golden(const GoldenPath& golden, double volatility) {
    check_path_inputs(golden.maturity, volatility, static_cast<std::size_t>(golden.grid));
    if (golden.w.empty() || golden.w.front() != 0.0) {
        throw std::runtime_error("Golden path must start at the origin");
    }
    BrownianPath path;
    path.maturity = golden.maturity;
    path.volatility = volatility;
    path.grid = static_cast<std::size_t>(golden.grid);
    path.dt = golden.maturity / static_cast<double>(golden.grid);
    path.w = golden.w;
    path.bstar.resize(path.w.size());
    for (std::size_t i = 0; i < path.w.size(); ++i) {
        path.bstar[i] = path.w[i] - 0.5 * volatility * path.time(i);
    }
    return path;
}

SignFrequency embedded_sign_frequency(const MarketParams& params, std::size_t n,
                                      std::size_t paths, std::size_t m, std::uint64_t seed,
                                      std::size_t threads) {
    const auto step = make_step_model(params, n);
    if (paths == 0) throw std::invalid_argument("Need at least one path");
    const double h = step.increment;
    // Far beyond any plausible first hitting time of +-h.
    const std::size_t max_steps = std::max<std::size_t>(1'000'000, 10'000 * m / n);

    std::vector<double> ups(paths);
    detail::parallel_for(paths, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            BrownianStream stream(params.maturity, params.volatility, m, seed, p);
            double b = 0.0;
            std::size_t count = 0;
            while (std::abs(b) < h) {
                if (++count > max_steps) throw std::runtime_error("Path failed to leave the band");
                b += stream.next_bstar_increment();
            }
            ups[p] = b > 0.0 ? 1.0 : 0.0;
        }
    });

    const auto est = detail::mean_and_se(ups);
    SignFrequency out;
    out.paths = paths;
    out.frequency = est.mean;
    out.standard_error = est.standard_error;
    out.expected = step.up_probability;
    return out;
}

}  // namespace gamehedge
