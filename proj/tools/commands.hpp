#pragma once

#include "io.hpp"

#include <cstdint>
#include <string>

namespace varigeo::cli {

enum ExitCode { kPass = 0, kFail = 1, kUndetermined = 2, kInputError = 3 };

struct RunConfig {
    std::string command;
    std::string input;
    std::string objective;  // stationarity only; otherwise the input may embed one
    int rank = -1;          // -1: take "rank" from the input file
    double rank_tol = 1e-8;
    double tol = 1e-9;
    double fd_tol_first = 1e-6;
    double fd_tol_second = 1e-4;
    std::uint64_t seed = 42;
    std::string out;
    std::string format = "json";
    bool emit_plots_data = false;  // decay curve CSV next to --out

    std::string set = "matrix";
    int order = 0;  // 0: command default
    bool oracle = false;
    int index = 1;
    int K = 3;
    std::string check = "tangent";
};

struct CommandResult {
    json report;
    int exit_code = kPass;
    std::string csv;  // decay curves, when requested
};

// Throws InputError (or std::invalid_argument from the library) on bad input.
CommandResult run_command(const RunConfig& cfg);

// Writes the corpus below cfg.out and returns the manifest report.
CommandResult cmd_corpus(const RunConfig& cfg);

std::string render_text(const json& report);

}  // namespace varigeo::cli
