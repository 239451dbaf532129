#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "skewlab/common.hpp"

namespace skewlab::io {

// Writes via a temp file in the same directory plus rename, so no partially
// written artifact is ever observable under the final name.
void atomic_write(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

// Shortest round-trip double formatting (deterministic across runs).
std::string fmt(double v);

class Csv {
public:
    explicit Csv(const std::vector<std::string>& header);
    Csv& cell(const std::string& s);
    Csv& cell(double v);
    Csv& cell(long v);
    Csv& endrow();
    const std::string& str() const { return buf_; }

private:
    std::string buf_;
    bool rowOpen_ = false;
};

// Binary PGM, maxval 255.
std::string pgm_encode(int width, int height, const std::vector<std::uint8_t>& gray);

}  // namespace skewlab::io
