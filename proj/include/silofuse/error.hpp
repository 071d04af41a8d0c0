#pragma once

#include <stdexcept>
#include <string>

namespace silofuse {

/// All module errors carry "module/operation: detail" so CLI failures name
/// their origin.
class Error : public std::runtime_error {
 public:
  Error(std::string module, std::string operation, const std::string& detail)
      : std::runtime_error(module + "/" + operation + ": " + detail),
        module_(std::move(module)),
        operation_(std::move(operation)) {}

  const std::string& module_name() const { return module_; }
  const std::string& operation() const { return operation_; }

 private:
  std::string module_;
  std::string operation_;
};

}  // namespace silofuse
