#pragma once

namespace predmkt {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace predmkt
