#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "fedprov/config.hpp"

namespace fedprov {

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Runs the configured experiment and writes every artefact under `out`.
void simulate_to(const ExperimentConfig& cfg, const std::filesystem::path& out);

/// Replays stored per-round updates through the configured detector and
/// writes verdicts.jsonl under `out`. Throws Error(io) for an empty dump.
void detect_from(const std::filesystem::path& updates, const ExperimentConfig& cfg, const std::filesystem::path& out);

/// Summary of a completed run directory.
void report_on(const std::filesystem::path& run, std::ostream& out);

int run_cli(int argc, char** argv);

}  // namespace fedprov
