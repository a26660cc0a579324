#pragma once

namespace selharq {

inline constexpr const char* version = "0.1.0";

}
