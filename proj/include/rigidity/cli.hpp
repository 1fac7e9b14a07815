#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace rigidity::cli {

enum ExitCode : int { Ok = 0, InputError = 1, Undetermined = 2, Mismatch = 3 };

struct JobOptions {
    std::filesystem::path config;
    std::filesystem::path out;
    std::optional<std::uint64_t> seed;
    std::optional<int> k_cap;
};

/// Runs one command ("classify", "predict", "dpp", "simulate",
/// "reproduce-paper"). Library errors become error.json in the output
/// directory and exit code 1.
int run(const std::string& command, const JobOptions& opt);

int run_classify(const JobOptions& opt);
int run_predict(const JobOptions& opt);
int run_dpp(const JobOptions& opt);
int run_simulate(const JobOptions& opt);
int run_reproduce(const JobOptions& opt);

}  // namespace rigidity::cli
