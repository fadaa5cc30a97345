#ifndef ECHOSIM_ERRORS_HPP
#define ECHOSIM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace echosim {

/// Bad input: violated precondition, malformed config, unusable resolution.
class ValidationError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A well-formed request that could not be carried out (fit divergence, ill-conditioning).
class RuntimeError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ValidationError(what);
}

} // namespace echosim

#endif // ECHOSIM_ERRORS_HPP
