#pragma once

namespace poe {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace poe
