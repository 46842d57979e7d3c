#include "qsllab/error.hpp"

#include <utility>

namespace qsllab {

AccuracyError::AccuracyError(const std::string& what, double achieved,
                             double requested)
    : Error(what), achieved_(achieved), requested_(requested) {}

NonConvergenceError::NonConvergenceError(const std::string& what,
                                         double last_delta)
    : Error(what), last_delta_(last_delta) {}

namespace {
std::string format_parse(const std::string& message, std::size_t line,
                         const std::string& key) {
  // Line 0 marks values that came from command-line overrides.
  std::string out =
      line == 0 ? std::string("override") : "line " + std::to_string(line);
  if (!key.empty()) out += ", key '" + key + "'";
  return out + ": " + message;
}
}  // namespace

ParseError::ParseError(const std::string& message, std::size_t line,
                       std::string key)
    : Error(format_parse(message, line, key)), line_(line),
      key_(std::move(key)) {}

}  // namespace qsllab
