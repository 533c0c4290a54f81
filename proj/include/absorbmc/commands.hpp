#pragma once

#include <filesystem>

#include "absorbmc/config.hpp"

namespace absorbmc {

/// Exit codes shared by the commands and the CLI wrapper.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNonConvergence = 3;
inline constexpr int kExitDomain = 4;

/// Each command is a pure function of (config, seed): identical inputs write
/// byte-identical files into out_dir. Returns kExitOk, or
/// kExitNonConvergence when some fit or fixed point failed to converge
/// (outputs are still written). Configuration and domain problems throw.
int cmd_walk(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);
int cmd_fit(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);
int cmd_concentration(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);
int cmd_queue(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace absorbmc
