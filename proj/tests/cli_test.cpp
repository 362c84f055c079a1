#include "gamehedge/cli.hpp"
#include "gamehedge/dynkin.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace gamehedge::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

json base_config() {
    return json::parse(R"({
        "market": {"rate": 0.06, "volatility": 0.2, "maturity": 1.0, "spot": 100.0},
        "payoff": {"type": "put", "strike": 100.0, "penalty": 2.0},
        "lattice": {"steps": 3, "steps_list": [4, 8, 16]},
        "mc": {"paths": 200, "grid": 1024, "seed": 5, "horizon_cap": 4, "with_gap": true}
    })");
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("gamehedge_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        unsetenv("GAMEHEDGE_SEED");
        unsetenv("GAMEHEDGE_THREADS");
    }
    void TearDown() override {
        fs::remove_all(dir_);
        unsetenv("GAMEHEDGE_SEED");
        unsetenv("GAMEHEDGE_THREADS");
    }

    std::string write_config(const json& doc, const std::string& name = "config.json") {
        const auto path = dir_ / name;
        std::ofstream(path) << doc.dump(2);
        return path.string();
    }

    int invoke(std::vector<std::string> args) {
        args.insert(args.begin(), "gamehedge");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        out_.str("");
        err_.str("");
        return run(static_cast<int>(argv.size()), argv.data(), out_, err_);
    }

    json output_json() const { return json::parse(out_.str()); }

    fs::path dir_;
    std::ostringstream out_;
    std::ostringstream err_;
};

TEST_F(CliTest, MissingFileIsConfigError) {
    EXPECT_EQ(invoke({"price", "--config", (dir_ / "absent.json").string()}), kExitConfig);
    EXPECT_EQ(output_json()["exit_code"], kExitConfig);
}

TEST_F(CliTest, InvalidFieldsAreConfigErrors) {
    auto doc = base_config();
    doc["market"]["volatility"] = -0.1;
    EXPECT_EQ(invoke({"price", "--config", write_config(doc)}), kExitConfig);
    EXPECT_TRUE(output_json().contains("error"));

    doc = base_config();
    doc["payoff"]["type"] = "straddle";
    EXPECT_EQ(invoke({"price", "--config", write_config(doc)}), kExitConfig);

    doc = base_config();
    doc["lattice"]["steps_list"] = {16, 8, 32};
    EXPECT_EQ(invoke({"convergence", "--config", write_config(doc)}), kExitConfig);

    doc = base_config();
    doc["market"].erase("spot");
    EXPECT_EQ(invoke({"price", "--config", write_config(doc)}), kExitConfig);

    std::ofstream(dir_ / "broken.json") << "{ not json";
    EXPECT_EQ(invoke({"price", "--config", (dir_ / "broken.json").string()}), kExitConfig);
}

TEST_F(CliTest, UnknownCommandIsConfigError) {
    EXPECT_EQ(invoke({"simulate", "--config", write_config(base_config())}), kExitConfig);
}

TEST_F(CliTest, ZeroPenaltyPricesHolderPayoff) {
    auto doc = base_config();
    doc["market"]["spot"] = 90.0;
    doc["payoff"]["penalty"] = 0.0;
    doc["lattice"]["steps"] = 50;
    ASSERT_EQ(invoke({"price", "--config", write_config(doc)}), kExitOk);
    const auto r = output_json();
    EXPECT_EQ(r["price"].get<double>(), r["holder_payoff_root"].get<double>());
    EXPECT_TRUE(r["sandwich_ok"].get<bool>());
}

TEST_F(CliTest, HugePenaltyPricesAmerican) {
    auto doc = base_config();
    doc["payoff"]["penalty"] = 1e9;
    doc["lattice"]["steps"] = 100;
    ASSERT_EQ(invoke({"price", "--config", write_config(doc)}), kExitOk);
    const auto r = output_json();
    EXPECT_NEAR(r["price"].get<double>(), r["american_price"].get<double>(), 1e-12);
}

TEST_F(CliTest, PriceVerifyAgainstEnumeration) {
    ASSERT_EQ(invoke({"price", "--config", write_config(base_config()), "--verify"}), kExitOk);
    const auto v = output_json()["verify"];
    EXPECT_EQ(v["method"], "rule_enumeration");
    EXPECT_EQ(v["rule_count"], 26);
    EXPECT_LE(v["abs_error"].get<double>(), 1e-12);
    EXPECT_TRUE(v["saddle"].get<bool>());
}

TEST_F(CliTest, HedgeReportsBoundsAndResiduals) {
    auto doc = base_config();
    doc["market"]["spot"] = 104.0;
    doc["lattice"]["steps"] = 256;
    ASSERT_EQ(invoke({"hedge", "--config", write_config(doc)}), kExitOk);
    const auto r = output_json();
    EXPECT_LE(r["max_abs_gamma"].get<double>(), 2.0);
    EXPECT_TRUE(r["gamma_bound_ok"].get<bool>());
    for (const auto& [name, value] : r["residuals_relative"].items()) {
        EXPECT_LE(value.get<double>(), 1e-12) << name;
    }
    EXPECT_TRUE(r["superhedge"]["dominated"].get<bool>());
}

TEST_F(CliTest, HedgeVerifyExhaustiveMargin) {
    auto doc = base_config();
    doc["lattice"]["steps"] = 4;
    ASSERT_EQ(invoke({"hedge", "--config", write_config(doc), "--verify"}), kExitOk);
    EXPECT_GE(output_json()["verify"]["exhaustive_margin"].get<double>(), -1e-12 * 100.0);
}

TEST_F(CliTest, ReportsCarryResolvedConfig) {
    ASSERT_EQ(invoke({"price", "--config", write_config(base_config()), "--seed", "77"}), kExitOk);
    const auto c = output_json()["config"];
    EXPECT_EQ(c["mc"]["seed"], 77);
    EXPECT_EQ(c["payoff"]["strike"], 100.0);
    EXPECT_FALSE(c.contains("threads"));
}

TEST_F(CliTest, SeedPrecedence) {
    setenv("GAMEHEDGE_SEED", "12", 1);
    ASSERT_EQ(invoke({"price", "--config", write_config(base_config())}), kExitOk);
    EXPECT_EQ(output_json()["config"]["mc"]["seed"], 12);
    ASSERT_EQ(invoke({"price", "--config", write_config(base_config()), "--seed", "13"}), kExitOk);
    EXPECT_EQ(output_json()["config"]["mc"]["seed"], 13);
    setenv("GAMEHEDGE_SEED", "twelve", 1);
    EXPECT_EQ(invoke({"price", "--config", write_config(base_config())}), kExitConfig);
    setenv("GAMEHEDGE_THREADS", "0", 1);
    unsetenv("GAMEHEDGE_SEED");
    EXPECT_EQ(invoke({"price", "--config", write_config(base_config())}), kExitConfig);
}

TEST_F(CliTest, ConvergenceAgainstFineLattice) {
    auto doc = base_config();
    doc["market"]["spot"] = 105.0;
    doc["lattice"]["steps_list"] = {16, 64, 256, 1024};
    ASSERT_EQ(invoke({"convergence", "--config", write_config(doc)}), kExitOk);
    std::istringstream csv(out_.str());
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, "n,price,diff_to_next,ratio");
    std::vector<double> prices;
    while (std::getline(csv, line)) {
        const auto a = line.find(',');
        prices.push_back(std::stod(line.substr(a + 1, line.find(',', a + 1) - a - 1)));
    }
    ASSERT_EQ(prices.size(), 4u);

    const MarketParams p{0.06, 0.2, 1.0, 105.0};
    const auto step = make_step_model(p, 2048);
    const auto lat = build_stock_lattice(step, p);
    const double reference = game_value(payoff_lattices(game_put(100.0, 2.0), lat, step), step)(0, 0);
    for (std::size_t i = 1; i < prices.size(); ++i) {
        EXPECT_LT(std::abs(prices[i] - reference), std::abs(prices[i - 1] - reference));
    }
}

TEST_F(CliTest, ShortfallNeedsThreeStepCounts) {
    auto doc = base_config();
    doc["lattice"]["steps_list"] = {4, 8};
    EXPECT_EQ(invoke({"shortfall", "--config", write_config(doc)}), kExitConfig);
}

TEST_F(CliTest, ShortfallAbortExitCode) {
    auto doc = base_config();
    doc["lattice"]["steps_list"] = {64, 128, 256};
    doc["mc"]["horizon_cap"] = 1.0;
    doc["mc"]["with_gap"] = false;
    EXPECT_EQ(invoke({"shortfall", "--config", write_config(doc)}), kExitAborted);
    EXPECT_EQ(output_json()["exit_code"], kExitAborted);
}

TEST_F(CliTest, ShortfallOutputsIdenticalAcrossThreadCounts) {
    auto doc = base_config();
    doc["market"]["spot"] = 110.0;
    const auto config = write_config(doc);
    const auto one = dir_ / "one";
    const auto four = dir_ / "four";
    ASSERT_EQ(invoke({"shortfall", "--config", config, "--out", one.string(), "--threads", "1"}), kExitOk);
    const auto stdout_one = out_.str();
    setenv("GAMEHEDGE_THREADS", "4", 1);
    ASSERT_EQ(invoke({"shortfall", "--config", config, "--out", four.string()}), kExitOk);
    EXPECT_EQ(out_.str(), stdout_one);
    for (const char* name : {"shortfall.csv", "shortfall.json"}) {
        std::ifstream a(one / name, std::ios::binary), b(four / name, std::ios::binary);
        const std::string sa{std::istreambuf_iterator<char>(a), {}};
        const std::string sb{std::istreambuf_iterator<char>(b), {}};
        EXPECT_FALSE(sa.empty());
        EXPECT_EQ(sa, sb) << name;
    }
}

}  // namespace
}  // namespace gamehedge::cli
