#ifndef ECHOSIM_CLI_HPP
#define ECHOSIM_CLI_HPP

#include <iosfwd>

namespace echosim {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

/// Subcommands: sweep, curves, trace, fit-decay, compensate, check, erase-demo.
/// Returns 0 on success, 1 on usage/validation errors, 2 on runtime errors.
int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace echosim

#endif // ECHOSIM_CLI_HPP
