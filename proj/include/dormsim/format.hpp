#pragma once

#include <charconv>
#include <stdexcept>
#include <string>
#include <system_error>

namespace dormsim {

// Shortest decimal form that parses back to the exact same double, so text
// outputs are both readable and lossless.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, res.ptr);
}

}  // namespace dormsim
