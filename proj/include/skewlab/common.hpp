#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <utility>

namespace skewlab {

using cnum = std::complex<double>;

// Error carries a stable machine-readable code ("domain-exceeded", "io-parse", ...)
// plus the module that raised it. The CLI maps codes onto exit statuses.
class Error : public std::runtime_error {
public:
    Error(std::string code, std::string module, const std::string& message)
        : std::runtime_error(module + ": " + message + " [" + code + "]"),
          code_(std::move(code)),
          module_(std::move(module)) {}

    const std::string& code() const noexcept { return code_; }
    const std::string& module() const noexcept { return module_; }

private:
    std::string code_;
    std::string module_;
};

inline double sq(double x) { return x * x; }

constexpr double kPi = 3.14159265358979323846;

}  // namespace skewlab
