#include "simret/binio.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "simret/error.hpp"

namespace simret::binio {

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    if (!f.good() && !f.eof()) throw DataError("read error on " + path);
    return ss.str();
}

void write_file_atomic(const std::string& path, const std::string& bytes) {
    // Write to a sibling temp file, then rename into place so readers never
    // observe a partially written file.
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw DataError("cannot write " + tmp);
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        f.flush();
        if (!f.good()) {
            std::remove(tmp.c_str());
            throw DataError("write error on " + tmp);
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::remove(tmp.c_str());
        throw DataError("cannot rename " + tmp + " to " + path + ": " + ec.message());
    }
}

}  // namespace simret::binio
