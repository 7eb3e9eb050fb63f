#pragma once

#include <filesystem>
#include <iosfwd>
#include <string_view>

#include "crt/study.hpp"

namespace crt {

inline constexpr std::string_view kPowerHeader =
    "model,beta,tau,design,procedure,param_T,param_pa,param_G,statistic,R,M,reject_rate,mc_se";
inline constexpr std::string_view kDecileHeader = "model,beta,procedure,decile,R,reject_rate,mc_se,binning";

/// Parses a study config: one `key = value` per line, value in JSON syntax
/// (numbers, strings, lists), `#` starts a comment. `alpha` is required;
/// unknown keys are rejected with SchemaError.
///
///   alpha = 0.05
///   betas = [0, 1.5, 3]
///   designs = [[50, 50], [25, 75]]
///   procedures = ["uncond_sd", "cond_sd_T4_pa0.1", "cem"]
///   cem.mode = "quantile"
///   cem.G = 2
StudyConfig parse_config(std::istream& in);
StudyConfig read_config(const std::filesystem::path& path);

void write_power_csv(const PowerTable& table, std::ostream& out);
void write_power_csv(const PowerTable& table, const std::filesystem::path& path);
PowerTable parse_power_csv(std::istream& in);
PowerTable read_power_csv(const std::filesystem::path& path);

void write_decile_csv(const DecileTable& table, std::ostream& out);
void write_decile_csv(const DecileTable& table, const std::filesystem::path& path);
DecileTable parse_decile_csv(std::istream& in);
DecileTable read_decile_csv(const std::filesystem::path& path);

}  // namespace crt
