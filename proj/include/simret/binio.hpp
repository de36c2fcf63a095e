#pragma once

#include <cstdint>
#include <cstring>
#include <iosfwd>
#include <string>
#include <vector>

#include "simret/error.hpp"

// Little-endian binary readers/writers for the on-disk formats.
// All serialized integers and floats are little-endian regardless of host.

namespace simret::binio {

namespace detail {
inline bool host_is_le() {
    const std::uint16_t probe = 1;
    unsigned char b;
    std::memcpy(&b, &probe, 1);
    return b == 1;
}
}  // namespace detail

template <typename T>
void put(std::string& out, T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    if (!detail::host_is_le())
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i)
            std::swap(buf[i], buf[sizeof(T) - 1 - i]);
    out.append(reinterpret_cast<const char*>(buf), sizeof(T));
}

inline void put_string(std::string& out, const std::string& s) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.append(s);
}

class Reader {
public:
    Reader(const void* data, std::size_t size)
        : p_(static_cast<const unsigned char*>(data)), size_(size) {}

    template <typename T>
    T get() {
        static_assert(std::is_trivially_copyable_v<T>);
        if (pos_ + sizeof(T) > size_)
            throw DataError("binary file truncated");
        unsigned char buf[sizeof(T)];
        std::memcpy(buf, p_ + pos_, sizeof(T));
        pos_ += sizeof(T);
        if (!detail::host_is_le())
            for (std::size_t i = 0; i < sizeof(T) / 2; ++i)
                std::swap(buf[i], buf[sizeof(T) - 1 - i]);
        T v;
        std::memcpy(&v, buf, sizeof(T));
        return v;
    }

    std::string get_string() {
        auto n = get<std::uint32_t>();
        if (pos_ + n > size_)
            throw DataError("binary file truncated");
        std::string s(reinterpret_cast<const char*>(p_ + pos_), n);
        pos_ += n;
        return s;
    }

    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return size_ - pos_; }

private:
    const unsigned char* p_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

std::string read_file(const std::string& path);
void write_file_atomic(const std::string& path, const std::string& bytes);

}  // namespace simret::binio
