#include "gamehedge/dynkin.hpp"
#include "gamehedge/path_tree.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace gamehedge {
namespace {

struct Instance {
    MarketParams params;
    StepModel step;
    StockLattice lattice;
    PayoffLattices payoffs;
};

Instance make_instance(const MarketParams& params, std::size_t n, const GamePayoffSpec& spec) {
    Instance in{params, make_step_model(params, n), {}, {}};
    in.lattice = build_stock_lattice(in.step, params);
    in.payoffs = payoff_lattices(spec, in.lattice, in.step);
    return in;
}

const MarketParams kBenchmark{0.06, 0.2, 1.0, 100.0};

// Benchmark put started in the money so that the rational rules are not trivial.
Instance n3_instance() { return make_instance(kBenchmark, 3, game_put(100.0, 2.0)); }

double binomial(std::size_t n, std::size_t k) {
    return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
}

TEST(GameValue, ZeroPenaltyPaysHolderAtRoot) {
    for (double z : {80.0, 100.0, 130.0}) {
        const auto in = make_instance({0.05, 0.25, 1.0, z}, 40, game_put(100.0, 0.0));
        const auto v = game_value(in.payoffs, in.step);
        EXPECT_EQ(v(0, 0), in.payoffs.holder(0, 0));
    }
}

TEST(GameValue, HugePenaltyIsAmerican) {
    const auto in = make_instance(kBenchmark, 200, game_put(100.0, 1e9));
    const auto v = game_value(in.payoffs, in.step);
    const auto american = american_value(in.payoffs.holder, in.step);
    for (std::size_t i = 0; i < american.size(); ++i) {
        EXPECT_NEAR(v.values.data()[i], american.data()[i], 1e-12);
    }
}

TEST(GameValue, MatchesRuleEnumerationAtThreeSteps) {
    const auto in = n3_instance();
    const auto v = game_value(in.payoffs, in.step);
    const auto brute = brute_force_value(in.payoffs, in.step);
    EXPECT_NEAR(v(0, 0), brute.value(), 1e-12);
    EXPECT_TRUE(brute.saddle(1e-12));
    EXPECT_EQ(brute.rule_count, 26u);
}

TEST(GameValue, SandwichAndTerminalCondition) {
    const auto in = make_instance(kBenchmark, 150, game_put(100.0, 2.0));
    const auto v = game_value(in.payoffs, in.step);
    for (std::size_t k = 0; k <= 150; ++k) {
        for (std::size_t j = 0; j <= k; ++j) {
            if (k == 150) {
                EXPECT_EQ(v(k, j), in.payoffs.holder(k, j));
            } else {
                EXPECT_LE(in.payoffs.holder(k, j), v(k, j));
                EXPECT_LE(v(k, j), in.payoffs.canceller(k, j));
            }
        }
    }
}

TEST(GameValue, MonotoneInPenalty) {
    double previous = 0.0;
    for (double delta : {0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0}) {
        const auto in = make_instance({0.06, 0.2, 1.0, 105.0}, 64, game_put(100.0, delta));
        const double v = game_value(in.payoffs, in.step)(0, 0);
        EXPECT_GE(v, previous);
        previous = v;
    }
}

TEST(GameValue, PathTreeAgreesWithLattice) {
    const auto in = make_instance({0.03, 0.3, 0.5, 95.0}, 10, game_call(90.0, 1.5));
    const auto v = game_value(in.payoffs, in.step);
    const auto tree = path_tree_game_value(in.payoffs, in.step);
    for (std::size_t k = 0; k <= 10; ++k) {
        for (std::uint32_t prefix = 0; prefix < (1u << k); ++prefix) {
            EXPECT_NEAR(tree[path_tree::node_id(k, prefix)], v(k, path_tree::ups(prefix)), 1e-12);
        }
    }
}

TEST(BruteForce, TwoNodeGameByHand) {
    const auto in = make_instance({0.06, 0.2, 1.0, 97.0}, 1, game_put(100.0, 0.75));
    const double a = in.payoffs.holder(0, 0);
    const double d = in.payoffs.canceller(0, 0) - a;
    const double p = in.step.up_probability;
    const double hand =
        std::min(a + d, std::max(a, p * in.payoffs.holder(1, 1) + (1 - p) * in.payoffs.holder(1, 0)));
    EXPECT_NEAR(brute_force_value(in.payoffs, in.step).value(), hand, 1e-14);
}

TEST(BruteForce, MinimaxEqualityOnRandomInstances) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> r(0.0, 0.1), k(0.05, 0.5), t(0.25, 2.0), z(70.0, 130.0),
        delta(0.0, 8.0);
    for (int i = 0; i < 12; ++i) {
        const std::size_t n = 1 + i % 4;
        const auto spec = i % 2 ? game_put(100.0, delta(rng)) : game_call(100.0, delta(rng));
        const auto in = make_instance({r(rng), k(rng), t(rng), z(rng)}, n, spec);
        const auto brute = brute_force_value(in.payoffs, in.step);
        EXPECT_GE(brute.upper, brute.lower - 1e-12);
        EXPECT_TRUE(brute.saddle(1e-12));
        EXPECT_NEAR(game_value(in.payoffs, in.step)(0, 0), brute.value(), 1e-12);
    }
}

TEST(BruteForce, RuleCountsAndLimits) {
    const std::size_t expected[] = {1, 2, 5, 26, 677};
    for (std::size_t n = 0; n <= 4; ++n) EXPECT_EQ(enumerate_rules(n).size(), expected[n]);
    const auto in = make_instance(kBenchmark, 5, game_put(100.0, 2.0));
    EXPECT_THROW(brute_force_value(in.payoffs, in.step), std::length_error);
    EXPECT_THROW(PathRule(21), std::length_error);
}

TEST(RationalStopping, ZeroPenaltyCancelsAtRoot) {
    const auto in = make_instance({0.06, 0.2, 1.0, 90.0}, 20, game_put(100.0, 0.0));
    const auto v = game_value(in.payoffs, in.step);
    const auto rules = rational_stopping(v, in.payoffs, kStoppingTolerance * 90.0);
    EXPECT_TRUE(rules.canceller.stops_at(0, 0));
}

TEST(RationalStopping, HugePenaltyCancelsOnlyAtMaturity) {
    const auto in = make_instance(kBenchmark, 30, game_put(100.0, 1e9));
    const auto v = game_value(in.payoffs, in.step);
    const auto rules = rational_stopping(v, in.payoffs, kStoppingTolerance * 100.0);
    for (std::size_t k = 0; k < 30; ++k) {
        for (std::size_t j = 0; j <= k; ++j) EXPECT_FALSE(rules.canceller.stops_at(k, j));
    }
    for (std::size_t j = 0; j <= 30; ++j) EXPECT_TRUE(rules.canceller.stops_at(30, j));
}

TEST(RationalStopping, RationalPairIsSaddlePoint) {
    for (double z : {100.0, 92.0, 110.0}) {
        const auto in = make_instance({0.06, 0.2, 1.0, z}, 3, game_put(100.0, 2.0));
        const auto v = game_value(in.payoffs, in.step);
        const auto rules = rational_stopping(v, in.payoffs, kStoppingTolerance * z);
        const auto cancel = PathRule::from_lattice(rules.canceller);
        const auto exercise = PathRule::from_lattice(rules.holder);
        EXPECT_NEAR(expected_game_payoff(cancel, exercise, in.payoffs, in.step), v(0, 0), 1e-12);
        // neither player gains by deviating alone
        EXPECT_LE(best_holder_response(cancel, in.payoffs, in.step), v(0, 0) + 1e-12);
        EXPECT_GE(best_canceller_response(exercise, in.payoffs, in.step), v(0, 0) - 1e-12);
    }
}

TEST(StoppingRule, FirstStopAlongPath) {
    auto rule = StoppingRule::at_maturity(4, RuleRole::Evaluation);
    rule.set_stop(2, 1);
    const int up_down[] = {1, -1, 1, 1};
    const int up_up[] = {1, 1, -1, -1};
    EXPECT_EQ(rule.first_stop(up_down), 2u);
    EXPECT_EQ(rule.first_stop(up_up), 4u);
    EXPECT_THROW(rule.set_stop(4, 0, false), std::invalid_argument);
    const int bad[] = {1, 0, 1, 1};
    EXPECT_THROW(rule.first_stop(bad), std::invalid_argument);
}

TEST(OneSidedEnvelope, NeverStoppingWithZeroEarlyPayoffIsEuropean) {
    const MarketParams p = kBenchmark;
    const std::size_t n = 25;
    GamePayoffSpec european;
    european.intrinsic = [T = p.maturity](double t, double s) {
        return t < T - 1e-12 ? 0.0 : std::max(100.0 - s, 0.0);
    };
    european.penalty = [](double) { return 0.0; };
    const auto in = make_instance(p, n, european);
    const auto u = one_sided_envelope(StoppingRule::at_maturity(n, RuleRole::Canceller), in.payoffs,
                                      in.step);
    // binomial sum of the discounted terminal payoff
    double expected = 0.0;
    const double q = in.step.up_probability;
    for (std::size_t j = 0; j <= n; ++j) {
        expected += binomial(n, j) * std::pow(q, j) * std::pow(1 - q, n - j) * in.payoffs.holder(n, j);
    }
    EXPECT_NEAR(u(0, 0), expected, 1e-12);
}

TEST(OneSidedEnvelope, CancelAtRootFreezesCancellationPayment) {
    const auto in = make_instance({0.06, 0.2, 1.0, 90.0}, 12, game_put(100.0, 3.0));
    const auto u = one_sided_envelope(StoppingRule::immediately(12, RuleRole::Canceller), in.payoffs,
                                      in.step);
    EXPECT_EQ(u(0, 0), in.payoffs.canceller(0, 0));
    EXPECT_TRUE(u.is_absorbing(0, 0));
}

TEST(OneSidedEnvelope, RationalCancellationReproducesGameValue) {
    for (std::size_t n : {3u, 64u, 257u}) {
        for (double z : {100.0, 108.0}) {
            const auto in = make_instance({0.06, 0.2, 1.0, z}, n, game_put(100.0, 2.0));
            const auto v = game_value(in.payoffs, in.step);
            const auto rules = rational_stopping(v, in.payoffs, kStoppingTolerance * z);
            const auto u = one_sided_envelope(rules.canceller, in.payoffs, in.step);
            EXPECT_NEAR(u(0, 0), v(0, 0), 1e-12 * z);
        }
    }
}

TEST(OneSidedEnvelope, SupermartingaleDominatingPayoffForRandomRules) {
    std::mt19937_64 rng(5);
    std::bernoulli_distribution stop(0.1);
    const std::size_t n = 40;
    const auto in = make_instance({0.06, 0.2, 1.0, 104.0}, n, game_put(100.0, 1.5));
    const double q = in.step.up_probability;
    for (int trial = 0; trial < 10; ++trial) {
        auto rule = StoppingRule::at_maturity(n, RuleRole::Canceller);
        for (std::size_t k = 0; k < n; ++k) {
            for (std::size_t j = 0; j <= k; ++j) {
                if (stop(rng)) rule.set_stop(k, j);
            }
        }
        const auto u = one_sided_envelope(rule, in.payoffs, in.step);
        for (std::size_t k = 0; k < n; ++k) {
            for (std::size_t j = 0; j <= k; ++j) {
                const double g = rule.stops_at(k, j) ? in.payoffs.canceller(k, j) : in.payoffs.holder(k, j);
                EXPECT_GE(u(k, j), g);
                if (!u.is_absorbing(k, j)) {
                    EXPECT_GE(u(k, j), (q * u(k + 1, j + 1) + (1 - q) * u(k + 1, j)) * (1 - 1e-12));
                }
            }
        }
    }
}

TEST(OneSidedEnvelope, PathTreeAgreesOnLiveNodes) {
    const std::size_t n = 9;
    const auto in = make_instance({0.06, 0.2, 1.0, 103.0}, n, game_put(100.0, 2.0));
    const auto v = game_value(in.payoffs, in.step);
    const auto rules = rational_stopping(v, in.payoffs, kStoppingTolerance * 103.0);
    const auto u = one_sided_envelope(rules.canceller, in.payoffs, in.step);
    const auto tree_rule = PathRule::from_lattice(rules.canceller);
    const auto tree = path_tree_envelope(tree_rule, in.payoffs, in.step);
    for (std::uint32_t path = 0; path < (1u << n); ++path) {
        const std::size_t stop = tree_rule.first_stop(path);
        for (std::size_t k = 0; k <= stop; ++k) {
            const auto prefix = path_tree::prefix_of(path, k);
            EXPECT_NEAR(tree[path_tree::node_id(k, prefix)], u(k, path_tree::ups(prefix)), 1e-12);
        }
    }
}

TEST(OneSidedEnvelope, LipschitzInDiscountedStock) {
    const auto in = make_instance(kBenchmark, 300, game_put(100.0, 2.0));
    const auto v = game_value(in.payoffs, in.step);
    const auto rules = rational_stopping(v, in.payoffs, kStoppingTolerance * 100.0);
    const auto u = one_sided_envelope(rules.canceller, in.payoffs, in.step);
    for (std::size_t k = 0; k <= 300; ++k) {
        for (std::size_t j = 0; j < k; ++j) {
            const double ds = in.lattice.discounted(k, j + 1) - in.lattice.discounted(k, j);
            EXPECT_LE(std::abs(u(k, j + 1) - u(k, j)), ds * (1.0 + 1e-10));
        }
    }
}

}  // namespace
}  // namespace gamehedge
