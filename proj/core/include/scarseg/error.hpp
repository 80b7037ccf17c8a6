#pragma once

#include <stdexcept>
#include <string>

namespace scarseg {

// Failure in one of the pipeline modules. The module tag is what the CLI
// prints in its single-line error output.
class Error : public std::runtime_error {
public:
    Error(std::string module, std::string message)
        : std::runtime_error(module + ": " + message),
          module_(std::move(module)),
          message_(std::move(message)) {}

    const std::string& module() const noexcept { return module_; }
    const std::string& message() const noexcept { return message_; }

private:
    std::string module_;
    std::string message_;
};

}  // namespace scarseg
