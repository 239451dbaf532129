#include "skewlab/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace skewlab::io {

void atomic_write(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("io-write", "io", "cannot open '" + tmp.string() + "' for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error("io-write", "io", "short write to '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io-not-found", "io", "cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Csv::Csv(const std::vector<std::string>& header) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) buf_ += ',';
        buf_ += header[i];
    }
    buf_ += '\n';
}

Csv& Csv::cell(const std::string& s) {
    if (rowOpen_) buf_ += ',';
    buf_ += s;
    rowOpen_ = true;
    return *this;
}

Csv& Csv::cell(double v) { return cell(fmt(v)); }

Csv& Csv::cell(long v) { return cell(std::to_string(v)); }

Csv& Csv::endrow() {
    buf_ += '\n';
    rowOpen_ = false;
    return *this;
}

std::string pgm_encode(int width, int height, const std::vector<std::uint8_t>& gray) {
    if (static_cast<std::size_t>(width) * static_cast<std::size_t>(height) != gray.size())
        throw Error("precondition", "io", "pgm payload size mismatch");
    std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(gray.data()), gray.size());
    return out;
}

}  // namespace skewlab::io
