#ifndef ASTRAS_IO_BINARY_HPP
#define ASTRAS_IO_BINARY_HPP

#include "astras/errors.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <type_traits>
#include <unistd.h>
#include <vector>

namespace astras::io {

/// Appends fixed-width little-endian values; floats as their IEEE-754 bits.
class ByteWriter {
public:
    template <class T>
        requires std::is_arithmetic_v<T>
    void put(T v)
    {
        using U = std::conditional_t<sizeof(T) == 1, std::uint8_t,
                                     std::conditional_t<sizeof(T) == 2, std::uint16_t,
                                                        std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>>;
        static_assert(sizeof(U) == sizeof(T));
        U u;
        std::memcpy(&u, &v, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T); ++i)
            buf_.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
    }

    void put_bool(bool b) { put<std::uint8_t>(b ? 1 : 0); }
    void put_string(const std::string& s)
    {
        put<std::uint64_t>(s.size());
        buf_.insert(buf_.end(), s.begin(), s.end());
    }
    void put_bytes(const void* p, std::size_t n)
    {
        const auto* b = static_cast<const std::uint8_t*>(p);
        buf_.insert(buf_.end(), b, b + n);
    }
    template <class T>
    void put_vector(const std::vector<T>& v)
    {
        put<std::uint64_t>(v.size());
        for (const T& x : v)
            put<T>(x);
    }

    const std::vector<std::uint8_t>& bytes() const noexcept { return buf_; }
    std::vector<std::uint8_t>& bytes() noexcept { return buf_; }

private:
    std::vector<std::uint8_t> buf_;
};

/// Bounds-checked reader; any overrun is a FormatError naming `what`.
class ByteReader {
public:
    ByteReader(const std::uint8_t* data, std::size_t size, std::string what = "payload")
        : p_(data), n_(size), what_(std::move(what))
    {
    }

    template <class T>
        requires std::is_arithmetic_v<T>
    T get()
    {
        need(sizeof(T));
        std::uint64_t u = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i)
            u |= static_cast<std::uint64_t>(p_[pos_ + i]) << (8 * i);
        pos_ += sizeof(T);
        T v;
        if constexpr (sizeof(T) == 1) {
            const auto b = static_cast<std::uint8_t>(u);
            std::memcpy(&v, &b, 1);
        } else if constexpr (sizeof(T) == 2) {
            const auto b = static_cast<std::uint16_t>(u);
            std::memcpy(&v, &b, 2);
        } else if constexpr (sizeof(T) == 4) {
            const auto b = static_cast<std::uint32_t>(u);
            std::memcpy(&v, &b, 4);
        } else {
            std::memcpy(&v, &u, 8);
        }
        return v;
    }

    bool get_bool() { return get<std::uint8_t>() != 0; }
    std::string get_string()
    {
        const auto n = length(1);
        std::string s(reinterpret_cast<const char*>(p_ + pos_), n);
        pos_ += n;
        return s;
    }
    template <class T>
    std::vector<T> get_vector()
    {
        const auto n = length(sizeof(T));
        std::vector<T> v(n);
        for (auto& x : v)
            x = get<T>();
        return v;
    }
    const std::uint8_t* take(std::size_t n)
    {
        need(n);
        const auto* r = p_ + pos_;
        pos_ += n;
        return r;
    }

    std::size_t position() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return n_ - pos_; }

private:
    void need(std::size_t k) const
    {
        if (k > n_ - pos_)
            throw FormatError(what_ + ": truncated at byte " + std::to_string(pos_));
    }
    std::size_t length(std::size_t elem)
    {
        const auto n = get<std::uint64_t>();
        if (n > (n_ - pos_) / elem)
            throw FormatError(what_ + ": length field " + std::to_string(n) + " exceeds the remaining bytes");
        return static_cast<std::size_t>(n);
    }

    const std::uint8_t* p_;
    std::size_t n_;
    std::size_t pos_ = 0;
    std::string what_;
};

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(const std::uint8_t* p, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ull)
{
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InputError("cannot open " + path.string());
    in.seekg(0, std::ios::end);
    const auto size = in.tellg();
    in.seekg(0);
    std::vector<std::uint8_t> out(static_cast<std::size_t>(size));
    if (size > 0 && !in.read(reinterpret_cast<char*>(out.data()), size))
        throw InputError("cannot read " + path.string());
    return out;
}

/// Writes to a sibling temporary, flushes it to disk and renames it over
/// `path`, so readers see either the old file or the complete new one.
inline void atomic_write(const std::filesystem::path& path, const void* data, std::size_t size)
{
    const auto dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    const auto tmp = dir / ("." + path.filename().string() + ".tmp." + std::to_string(::getpid()));
    std::FILE* f = std::fopen(tmp.c_str(), "wb");
    if (!f)
        throw InputError("cannot create " + tmp.string());
    const bool ok = (size == 0 || std::fwrite(data, 1, size, f) == size) && std::fflush(f) == 0 && ::fsync(::fileno(f)) == 0;
    if (std::fclose(f) != 0 || !ok) {
        std::filesystem::remove(tmp);
        throw InputError("write failed for " + path.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw InputError("cannot rename onto " + path.string() + ": " + ec.message());
    }
}

inline void atomic_write(const std::filesystem::path& path, const std::string& text)
{
    atomic_write(path, text.data(), text.size());
}

inline void atomic_write(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes)
{
    atomic_write(path, bytes.data(), bytes.size());
}

} // namespace astras::io

#endif // ASTRAS_IO_BINARY_HPP
