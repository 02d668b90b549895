#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cutstack {

/// Module of origin for an error; surfaced by the CLI as "<module>/<code>".
enum class Module {
  exact,
  gadget,
  transform,
  tests,
  martingale,
  construction,
  code,
  cli,
};

constexpr std::string_view module_name(Module m) {
  switch (m) {
    case Module::exact: return "exact-arith";
    case Module::gadget: return "gadget-algebra";
    case Module::transform: return "transform-engine";
    case Module::tests: return "randomness-tests";
    case Module::martingale: return "martingale-lab";
    case Module::construction: return "instability-construction";
    case Module::code: return "universal-code";
    case Module::cli: return "cli-harness";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Module module, std::string code, const std::string& message)
      : std::runtime_error(message), module_(module), code_(std::move(code)) {}

  Module module() const { return module_; }
  const std::string& code() const { return code_; }

  std::string qualified() const {
    return std::string(module_name(module_)) + "/" + code_ + ": " + what();
  }

 private:
  Module module_;
  std::string code_;
};

}  // namespace cutstack
