#include "gamehedge/shortfall.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

namespace gamehedge {
namespace {

const MarketParams kBenchmark{0.06, 0.2, 1.0, 100.0};

BrownianPath golden() {
    return path_from_golden(read_golden_path(std::filesystem::path(GAMEHEDGE_TEST_DATA) / "golden_path.bin"),
                            kBenchmark.volatility);
}

ShortfallConfig small_config(std::vector<std::size_t> steps, std::size_t threads) {
    ShortfallConfig c;
    c.steps = std::move(steps);
    c.paths = 200;
    c.grid = 1024;
    c.seed = 31;
    c.threads = threads;
    return c;
}

std::string csv_of(const ShortfallReport& report) {
    std::ostringstream out;
    write_shortfall_csv(out, report);
    return out.str();
}

TEST(Shortfall, ZeroPayoffGivesZero) {
    GamePayoffSpec zero;
    zero.intrinsic = [](double, double) { return 0.0; };
    zero.penalty = [](double) { return 0.0; };
    const auto path = golden();
    const auto game = solve_game(zero, kBenchmark, 16);
    const auto sample = shortfall_psi(path, zero, kBenchmark, game, embed_times(path, game.step));
    EXPECT_EQ(sample.psi, 0.0);
}

TEST(Shortfall, CancelAtRootPutGivesZero) {
    // at the money with a small penalty the issuer cancels immediately on both sides
    const auto path = golden();
    const auto put = game_put(100.0, 2.0);
    const auto game = solve_game(put, kBenchmark, 16);
    ASSERT_TRUE(game.rules.canceller.stops_at(0, 0));
    const auto sample = shortfall_psi(path, put, kBenchmark, game, embed_times(path, game.step));
    EXPECT_EQ(sample.cancel_step, 0u);
    EXPECT_EQ(sample.cancel_time, 0.0);
    EXPECT_EQ(sample.psi, 0.0);
}

TEST(Shortfall, GoldenPathMatchesScalarComputation) {
    const MarketParams p{0.06, 0.2, 1.0, 110.0};
    const auto path = path_from_golden(
        read_golden_path(std::filesystem::path(GAMEHEDGE_TEST_DATA) / "golden_path.bin"), p.volatility);
    const auto put = game_put(100.0, 2.0);
    const std::size_t n = 16;
    const auto game = solve_game(put, p, n);
    const auto e = embed_times(path, game.step);
    const auto sample = shortfall_psi(path, put, p, game, e);

    const double h = std::sqrt(1.0 / n);
    auto lattice_holder = [&](std::size_t k, std::size_t j) {
        const double tk = static_cast<double>(k) / n;
        const double s = p.spot * std::exp(p.rate * tk + p.volatility * h * (2.0 * j - double(k)));
        return std::exp(-p.rate * tk) * std::max(100.0 - s, 0.0);
    };
    auto lattice_canceller = [&](std::size_t k, std::size_t j) {
        return lattice_holder(k, j) + 2.0 * std::exp(-p.rate * static_cast<double>(k) / n);
    };
    auto stock_at = [&](double t) {
        return p.spot * std::exp(p.rate * t + p.volatility * path.bstar_at(t));
    };

    const std::size_t last = std::min(e.crossings(), n);
    std::size_t phi = n;
    bool resolved = false;
    for (std::size_t k = 0; k <= last; ++k) {
        if (k == n || game.rules.canceller.stops_at(k, e.up_count[k])) {
            phi = k;
            resolved = true;
            break;
        }
    }
    const double s = resolved ? std::min(e.theta[phi], 1.0) : 1.0;
    double psi = 0.0;
    for (std::size_t i = 0; i <= 1024; ++i) {
        const double t = i / 1024.0;
        std::size_t nu = 0;
        while (nu < last && e.theta[nu] < t) ++nu;
        const double discrete = resolved && phi < nu ? lattice_canceller(phi, e.up_count[phi])
                                                     : lattice_holder(nu, e.up_count[nu]);
        const double continuous =
            s < t ? std::exp(-p.rate * s) * (std::max(100.0 - stock_at(s), 0.0) + 2.0)
                  : std::exp(-p.rate * t) * std::max(100.0 - stock_at(t), 0.0);
        psi = std::max(psi, continuous - discrete);
    }
    EXPECT_NEAR(sample.psi, psi, 1e-12);
    EXPECT_EQ(sample.cancel_step, phi);
}

TEST(Shortfall, BoundedByLargestContinuousPayment) {
    const MarketParams p{0.06, 0.2, 1.0, 105.0};
    const auto put = game_put(100.0, 2.0);
    const auto game = solve_game(put, p, 64);
    for (std::uint64_t index = 0; index < 30; ++index) {
        const auto path = sample_path(p, 4096, 8, index, 4.0);
        const auto sample = shortfall_psi(path, put, p, game, embed_times(path, game.step));
        double bound = 0.0;
        for (std::size_t i = 0; i <= 4096; ++i) {
            const double t = path.time(i);
            bound = std::max(bound, continuous_game_payoff(path, put, p, t, 1.0));
        }
        EXPECT_GE(sample.psi, 0.0);
        EXPECT_LE(sample.psi, bound + 1e-12);
    }
}

TEST(Shortfall, RuleOverloadAgreesWithSolvedGame) {
    const MarketParams p{0.06, 0.2, 1.0, 110.0};
    const auto put = game_put(100.0, 2.0);
    const auto game = solve_game(put, p, 16);
    const auto path = golden();
    const auto a = shortfall_psi(path, put, p, game, embed_times(path, game.step));
    const auto b = shortfall_psi(path, put, p, game.step, game.rules.canceller);
    EXPECT_EQ(a.psi, b.psi);
}

TEST(Shortfall, IdenticalAcrossThreadCounts) {
    const auto put = game_put(100.0, 2.0);
    const MarketParams p{0.06, 0.2, 1.0, 110.0};
    const auto one = estimate_mean_shortfall(put, p, small_config({4, 16}, 1));
    const auto many = estimate_mean_shortfall(put, p, small_config({4, 16}, 5));
    EXPECT_EQ(csv_of(one), csv_of(many));
    for (std::size_t i = 0; i < one.rows.size(); ++i) {
        EXPECT_EQ(one.rows[i].gap.mean, many.rows[i].gap.mean);
    }
}

TEST(Shortfall, ReportShape) {
    const auto put = game_put(100.0, 2.0);
    const MarketParams p{0.06, 0.2, 1.0, 110.0};
    const auto report = estimate_mean_shortfall(put, p, small_config({4, 8, 16}, 2));
    ASSERT_EQ(report.rows.size(), 3u);
    for (const auto& row : report.rows) {
        EXPECT_EQ(row.paths, 200u);
        EXPECT_EQ(row.gap.labels.size(), 21u);
        EXPECT_NEAR(row.c_fit, row.mean_psi * std::pow(double(row.steps), 0.25), 1e-15);
        EXPECT_LE(row.c_fit, report.c_fit);
    }
    const auto csv = csv_of(report);
    EXPECT_EQ(csv.substr(0, csv.find('\n')),
              "n,N,mean_psi,se_psi,slope_fit,c_fit,gap_max,gap_se,truncated_paths");
}

TEST(Shortfall, RejectsBadConfig) {
    const auto put = game_put(100.0, 2.0);
    auto c = small_config({16, 4}, 1);
    EXPECT_THROW(estimate_mean_shortfall(put, kBenchmark, c), std::invalid_argument);
    c = small_config({4, 16}, 1);
    c.paths = 10;
    EXPECT_THROW(estimate_mean_shortfall(put, kBenchmark, c), std::invalid_argument);
}

TEST(Shortfall, AbortsWhenEmbeddingsTruncate) {
    auto c = small_config({256}, 2);
    c.horizon_cap = 1.0;
    c.with_gap = false;
    EXPECT_THROW(estimate_mean_shortfall(game_put(100.0, 2.0), {0.06, 0.2, 1.0, 110.0}, c),
                 ExperimentAborted);
}

TEST(Gap, DefaultFamilyComposition) {
    const auto family = default_holder_family(kBenchmark);
    ASSERT_EQ(family.size(), 21u);
    EXPECT_EQ(family[0].label, "time_0/16");
    EXPECT_DOUBLE_EQ(family[15].level, 15.0 / 16.0);
    EXPECT_EQ(family[16].kind, HolderRuleKind::LowerBarrier);
    EXPECT_DOUBLE_EQ(family[19].level, 120.0);
    EXPECT_EQ(family[20].kind, HolderRuleKind::RationalEmbedded);
}

TEST(Gap, ImmediateExerciseIsCovered) {
    const MarketParams p{0.06, 0.2, 1.0, 95.0};
    const auto put = game_put(100.0, 2.0);
    const auto game = solve_game(put, p, 16);
    const std::vector<HolderRule> family{{HolderRuleKind::Fixed, 0.0, "now"}};
    auto c = small_config({}, 2);
    const auto gap = hedging_gap(put, p, game, family, c);
    // the initial capital is the game value, which dominates the intrinsic value
    EXPECT_EQ(gap.mean[0], 0.0);
}

TEST(FitLogSlope, KnownSlopesAndInvalidInput) {
    EXPECT_NEAR(fit_log_slope({1, 2, 4}, {1, 0.5, 0.25}), -1.0, 1e-14);
    EXPECT_NEAR(fit_log_slope({16, 64, 256}, {2, 2 / std::sqrt(2.0), 1}), -0.25, 1e-14);
    EXPECT_TRUE(std::isnan(fit_log_slope({1, 2}, {1, 0})));
    EXPECT_TRUE(std::isnan(fit_log_slope({1}, {1})));
}

}  // namespace
}  // namespace gamehedge
