#pragma once

#include <iostream>
#include <string>

namespace fedsim {

inline bool& verbose_logging() {
    static bool v = false;
    return v;
}

inline void log_warn(const std::string& msg) { std::cerr << "[fedsim] warn: " << msg << "\n"; }

inline void log_info(const std::string& msg) {
    if (verbose_logging()) std::cerr << "[fedsim] " << msg << "\n";
}

}  // namespace fedsim
