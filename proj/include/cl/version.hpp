#pragma once

namespace cl {

inline constexpr const char* kVersion = "0.1.0";

}
