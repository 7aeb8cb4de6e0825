#pragma once

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>

namespace hyperpart::internal {

[[noreturn]] inline void assertionFailed(const char* expr, const char* file,
                                         int line, const std::string& msg) {
  std::cerr << "Assertion failed: " << expr << "\n  at " << file << ":" << line;
  if (!msg.empty()) {
    std::cerr << "\n  " << msg;
  }
  std::cerr << std::endl;
  std::abort();
}

}  // namespace hyperpart::internal

// Assertions stay on in optimized builds unless explicitly disabled; the
// concurrent code paths are exactly where NDEBUG-style stripping hurts most.
#ifdef HYPERPART_ENABLE_ASSERTIONS
#define HP_ASSERT(cond, ...)                                                  \
  do {                                                                        \
    if (!(cond)) {                                                            \
      std::ostringstream hp_assert_oss;                                       \
      hp_assert_oss << "" __VA_ARGS__;                                        \
      ::hyperpart::internal::assertionFailed(#cond, __FILE__, __LINE__,       \
                                             hp_assert_oss.str());            \
    }                                                                         \
  } while (false)
#else
#define HP_ASSERT(cond, ...) ((void)0)
#endif
