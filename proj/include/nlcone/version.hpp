#pragma once

namespace nlcone {

inline constexpr const char* version_string = "0.1.0";

}
