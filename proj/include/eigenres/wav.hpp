#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "eigenres/signal.hpp"

namespace eigenres {

namespace detail {

inline std::uint16_t rd_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
inline std::uint32_t rd_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
inline void wr_u16(std::ostream& os, std::uint16_t v) {
    const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
    os.write(b, 2);
}
inline void wr_u32(std::ostream& os, std::uint32_t v) {
    const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                       static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    os.write(b, 4);
}

}  // namespace detail

// Reads a 16-bit PCM mono RIFF/WAVE file. Samples are scaled by 1/32768.
inline Signal read_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_wav: cannot open " + path);
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
    if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
        std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
        throw std::runtime_error("read_wav: not a RIFF/WAVE file: " + path);

    std::uint32_t sample_rate = 0;
    std::uint16_t channels = 0, bits = 0, format = 0;
    bool have_fmt = false;
    const unsigned char* data = nullptr;
    std::uint32_t data_len = 0;

    std::size_t pos = 12;
    while (pos + 8 <= buf.size()) {
        const unsigned char* hdr = buf.data() + pos;
        const std::uint32_t chunk_len = detail::rd_u32(hdr + 4);
        const unsigned char* body = hdr + 8;
        if (pos + 8 + chunk_len > buf.size())
            throw std::runtime_error("read_wav: truncated chunk in " + path);
        if (std::memcmp(hdr, "fmt ", 4) == 0) {
            if (chunk_len < 16) throw std::runtime_error("read_wav: bad fmt chunk");
            format = detail::rd_u16(body);
            channels = detail::rd_u16(body + 2);
            sample_rate = detail::rd_u32(body + 4);
            bits = detail::rd_u16(body + 14);
            have_fmt = true;
        } else if (std::memcmp(hdr, "data", 4) == 0) {
            data = body;
            data_len = chunk_len;
        }
        pos += 8 + chunk_len + (chunk_len & 1);  // chunks are word-aligned
    }
    if (!have_fmt || data == nullptr) throw std::runtime_error("read_wav: missing fmt/data chunk");
    if (format != 1) throw std::runtime_error("read_wav: unsupported encoding (PCM only)");
    if (channels != 1) throw std::runtime_error("read_wav: unsupported channel count");
    if (bits != 16) throw std::runtime_error("read_wav: unsupported bit depth (16-bit only)");
    if (sample_rate == 0) throw std::runtime_error("read_wav: zero sample rate");

    Signal s;
    s.sample_rate = static_cast<int>(sample_rate);
    const std::size_t n = data_len / 2;
    s.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::int16_t v =
            static_cast<std::int16_t>(detail::rd_u16(data + 2 * i));
        s.samples[i] = static_cast<double>(v) / 32768.0;
    }
    return s;
}

// Writes 16-bit PCM mono. Values are clamped to [-1, 32767/32768] before
// quantization, so the read-back differs by less than one quantization step.
inline void write_wav(const Signal& signal, const std::string& path) {
    if (signal.sample_rate <= 0) throw std::invalid_argument("write_wav: invalid sample rate");
    for (double v : signal.samples)
        if (!std::isfinite(v)) throw std::invalid_argument("write_wav: non-finite sample");

    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_wav: cannot open " + path);

    const std::uint32_t n = static_cast<std::uint32_t>(signal.samples.size());
    const std::uint32_t data_len = n * 2;
    const std::uint32_t rate = static_cast<std::uint32_t>(signal.sample_rate);

    os.write("RIFF", 4);
    detail::wr_u32(os, 36 + data_len);
    os.write("WAVE", 4);
    os.write("fmt ", 4);
    detail::wr_u32(os, 16);
    detail::wr_u16(os, 1);  // PCM
    detail::wr_u16(os, 1);  // mono
    detail::wr_u32(os, rate);
    detail::wr_u32(os, rate * 2);  // byte rate
    detail::wr_u16(os, 2);         // block align
    detail::wr_u16(os, 16);
    os.write("data", 4);
    detail::wr_u32(os, data_len);
    for (double v : signal.samples) {
        long q = std::lround(v * 32768.0);
        q = std::min(32767L, std::max(-32768L, q));
        detail::wr_u16(os, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
    }
    if (!os) throw std::runtime_error("write_wav: write failed for " + path);
}

}  // namespace eigenres
