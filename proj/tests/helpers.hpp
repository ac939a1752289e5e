#pragma once

#include <functional>
#include <string>

#include "ftdo/errors.hpp"

namespace testutil {

// Runs f and reports the error code it throws; 0 when f does not throw.
inline int thrown_code(const std::function<void()>& f) {
  try {
    f();
  } catch (const ftdo::Error& e) {
    return static_cast<int>(e.code());
  }
  return 0;
}

// Runs f and reports the message it throws; empty when f does not throw.
inline std::string thrown_message(const std::function<void()>& f) {
  try {
    f();
  } catch (const ftdo::Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace testutil
