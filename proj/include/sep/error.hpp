#pragma once

#include <stdexcept>
#include <string>

namespace sep {

/// Base class for every error raised by the library. `code()` is a short
/// machine-readable tag used by the CLI error JSON.
class error : public std::runtime_error {
 public:
  error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

struct domain_error : error {
  explicit domain_error(const std::string& what) : error("domain_error", what) {}
};

struct grid_mismatch : error {
  explicit grid_mismatch(const std::string& what) : error("grid_mismatch", what) {}
};

struct boundary_violation : error {
  explicit boundary_violation(const std::string& what)
      : error("boundary_violation", what) {}
};

struct compatibility_error : error {
  explicit compatibility_error(const std::string& what)
      : error("compatibility_error", what) {}
};

struct convergence_error : error {
  explicit convergence_error(const std::string& what)
      : error("convergence_error", what) {}
};

struct config_error : error {
  explicit config_error(const std::string& what) : error("config_error", what) {}
};

}  // namespace sep
