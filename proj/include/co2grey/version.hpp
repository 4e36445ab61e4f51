#pragma once

namespace co2grey {

inline constexpr const char* kVersion = "0.4.0";

}  // namespace co2grey
