#pragma once

#include <iostream>
#include <mutex>
#include <string>

namespace pcd {

// Destination for library warnings; tests may redirect it (nullptr silences).
inline std::ostream*& warning_stream() {
    static std::ostream* stream = &std::cerr;
    return stream;
}

inline void warn(const std::string& msg) {
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    if (warning_stream() != nullptr) (*warning_stream()) << "warning: " << msg << '\n';
}

}  // namespace pcd
