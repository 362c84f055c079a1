/**
 * @file cli.hpp
 * @brief Batch front end: configuration, commands and report emission.
 */

#ifndef GAMEHEDGE_CLI_HPP
#define GAMEHEDGE_CLI_HPP

#include "gamehedge/model.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace gamehedge::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitAuditFailed = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitAborted = 3;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    MarketParams market;
    std::string payoff_type = "put";
    double strike = 0.0;
    double penalty = 0.0;
    std::size_t steps = 64;
    std::vector<std::size_t> steps_list{16, 64, 256};
    std::size_t paths = 20000;
    std::size_t grid = 0;  ///< 0 means 64 max(steps_list)
    std::uint64_t seed = 1;
    double horizon_cap = 4.0;
    bool with_gap = true;
    std::size_t threads = 1;  ///< not part of the serialized config

    GamePayoffSpec payoff() const;
};

/// Throws ConfigError on missing or invalid fields.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::string& path);
/// Resolved configuration as written into every report.
nlohmann::json config_to_json(const RunConfig& config);

/// Entry point behind the `gamehedge` executable. Returns the exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gamehedge::cli

#endif  // GAMEHEDGE_CLI_HPP
