#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace srdetect::cli {

/// Everything a subcommand needs. Serialized as INI sections
/// [model], [procedure], [numerics], [montecarlo], [output].
struct ExperimentConfig {
    std::string model = "exponential";
    double theta = 2.0;
    double mu = 1.0;

    std::string procedure = "sr-r";
    double head_start = 0.0;
    /// NaN = not set; written as "none".
    double threshold = std::numeric_limits<double>::quiet_NaN();
    double gamma = 2.0;
    bool equalize = false;

    std::size_t nodes = 256;
    std::string quadrature = "gauss-legendre";
    double tol = 1e-10;
    std::size_t nu_max = 20;
    std::string route = "auto";
    std::size_t points = 200;

    std::uint64_t runs = 10000;
    std::uint64_t seed = 1;
    std::uint64_t cap = 10'000'000;
    unsigned threads = 0;
    /// "inf" or a nonnegative integer.
    std::string nu = "inf";
    /// none (per-run CSV), arl, cadd or iradd.
    std::string estimate = "none";
    double ir_weight = 0.0;
    /// "auto" or a nonnegative integer.
    std::string iradd_nu_max = "auto";

    std::string out;
    std::string plot;

    bool operator==(const ExperimentConfig& other) const;
};

/// Every field, default or not, with doubles at 17 significant digits.
std::string to_ini(const ExperimentConfig& config);
/// Starts from `base` and applies the keys present in `text`.
/// Throws ValidationError naming every unknown or malformed key.
ExperimentConfig from_ini(const std::string& text, const ExperimentConfig& base = {});
/// Field-level problems for a given subcommand; empty when valid.
std::vector<std::string> validate(const ExperimentConfig& config, const std::string& command);

/// Entry point behind the srdetect executable. Returns the process exit
/// code: 0 success, 1 validation error, 2 numeric failure, 3 acceptance
/// deviation.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Name of the environment variable holding the default output directory.
inline constexpr const char* output_dir_env = "SRDETECT_OUTPUT_DIR";

} // namespace srdetect::cli
