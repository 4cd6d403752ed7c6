#ifndef RDCOMP_CLI_HPP
#define RDCOMP_CLI_HPP

#include "rdcomp/compressors.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace rdcomp {

enum ExitCode : int { kExitOk = 0, kExitParameter = 1, kExitIo = 2, kExitNumerical = 3 };

/// Fields: centroids, assignments, rate_nats, rate_bits, diameter,
/// objective, iterations_run (plus k and penalized_objective).
nlohmann::json quantization_report(const Quantization<double>& q, RateMode mode);

/// Entry point of the `rdcomp` tool. Results go to `out` when no --out path
/// is given; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rdcomp

#endif  // RDCOMP_CLI_HPP
