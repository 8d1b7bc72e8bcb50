#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

namespace toolplan::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;

/// Options shared by every subcommand.
struct RunConfig {
    std::filesystem::path catalog_path;
    std::filesystem::path corpus_path;
    std::filesystem::path data_dir;
    std::uint64_t seed = 42;
    std::string condition;
    std::filesystem::path out_dir = "out";
};

/// Entry point behind the `toolplan` binary. Exit codes: 0 success,
/// 1 internal error, 2 usage or input error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace toolplan::cli
