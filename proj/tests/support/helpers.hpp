#pragma once

#include "csmspec/error.hpp"

#include <doctest.h>

#include <string>

// CHECK that `expr` throws csmspec::Error with the given code.
#define CHECK_CSM_ERROR(expr, error_code)                                  \
  do {                                                                     \
    bool thrown_ = false;                                                  \
    try {                                                                  \
      (void)(expr);                                                        \
    } catch (const csmspec::Error& e_) {                                   \
      thrown_ = true;                                                      \
      CHECK_MESSAGE(e_.code() == (error_code), e_.what());                 \
    }                                                                      \
    CHECK_MESSAGE(thrown_, "expected csmspec::Error from " #expr);         \
  } while (false)
