#pragma once

#include <stdexcept>
#include <string>

namespace kindiff {

// All toolkit failures surface as Error with a structured "<where>: <what>" message.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(msg);
}

}  // namespace kindiff
