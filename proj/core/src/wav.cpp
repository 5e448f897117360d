#include "beamkit/wav.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "beamkit/errors.hpp"

namespace beamkit {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t le32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t le16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put32(std::ostream& os, std::uint32_t v) {
    const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                                static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    os.write(b.data(), 4);
}

void put16(std::ostream& os, std::uint16_t v) {
    const std::array<char, 2> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
    os.write(b.data(), 2);
}

}  // namespace

Waveform read_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path, "cannot open file");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw IoError(path, "not a RIFF/WAVE file");

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    const unsigned char* data = nullptr;
    std::size_t data_size = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const unsigned char* chunk = bytes.data() + pos;
        const std::size_t size = le32(chunk + 4);
        const std::size_t body = pos + 8;
        if (body + size > bytes.size() && std::memcmp(chunk, "data", 4) != 0)
            throw IoError(path, "truncated chunk");
        if (std::memcmp(chunk, "fmt ", 4) == 0) {
            if (size < 16) throw IoError(path, "fmt chunk too small");
            format = le16(bytes.data() + body);
            channels = le16(bytes.data() + body + 2);
            rate = le32(bytes.data() + body + 4);
            bits = le16(bytes.data() + body + 14);
            if (format == kFormatExtensible) {
                if (size < 40) throw IoError(path, "extensible fmt chunk too small");
                format = le16(bytes.data() + body + 24);
            }
        } else if (std::memcmp(chunk, "data", 4) == 0) {
            data = bytes.data() + body;
            data_size = std::min(size, bytes.size() - body);
            break;
        }
        pos = body + size + (size & 1);
    }
    if (channels == 0 || rate == 0) throw IoError(path, "missing or invalid fmt chunk");
    if (data == nullptr) throw IoError(path, "missing data chunk");

    const bool pcm16 = format == kFormatPcm && bits == 16;
    const bool f32 = format == kFormatFloat && bits == 32;
    if (!pcm16 && !f32) throw IoError(path, "unsupported sample format (need 16-bit PCM or 32-bit float)");

    const std::size_t bytes_per_sample = bits / 8;
    const std::size_t frames = data_size / (bytes_per_sample * channels);
    Waveform w(static_cast<double>(rate), channels, frames);
    for (std::size_t i = 0; i < frames; ++i) {
        for (std::size_t c = 0; c < channels; ++c) {
            const unsigned char* p = data + (i * channels + c) * bytes_per_sample;
            if (pcm16) {
                const auto v = static_cast<std::int16_t>(le16(p));
                w.channels[c][i] = static_cast<double>(v) / 32768.0;
            } else {
                const std::uint32_t u = le32(p);
                float f;
                std::memcpy(&f, &u, sizeof f);
                w.channels[c][i] = static_cast<double>(f);
            }
        }
    }
    return w;
}

void write_wav(const std::string& path, const Waveform& w, SampleFormat format) {
    if (w.num_channels() == 0) throw EmptyInputError("cannot write a waveform without channels");
    w.validate();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError(path, "cannot open file for writing");

    const auto channels = static_cast<std::uint16_t>(w.num_channels());
    const std::uint16_t bits = format == SampleFormat::Pcm16 ? 16 : 32;
    const auto rate = static_cast<std::uint32_t>(std::lround(w.sample_rate));
    const std::uint32_t block = channels * (bits / 8u);
    const auto data_size = static_cast<std::uint32_t>(w.num_samples() * block);

    os.write("RIFF", 4);
    put32(os, 36 + data_size);
    os.write("WAVE", 4);
    os.write("fmt ", 4);
    put32(os, 16);
    put16(os, format == SampleFormat::Pcm16 ? kFormatPcm : kFormatFloat);
    put16(os, channels);
    put32(os, rate);
    put32(os, rate * block);
    put16(os, static_cast<std::uint16_t>(block));
    put16(os, bits);
    os.write("data", 4);
    put32(os, data_size);

    for (std::size_t i = 0; i < w.num_samples(); ++i) {
        for (std::size_t c = 0; c < channels; ++c) {
            const double v = w.channels[c][i];
            if (format == SampleFormat::Pcm16) {
                const double scaled = std::clamp(std::round(v * 32768.0), -32768.0, 32767.0);
                put16(os, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
            } else {
                const auto f = static_cast<float>(v);
                std::uint32_t u;
                std::memcpy(&u, &f, sizeof u);
                put32(os, u);
            }
        }
    }
    if (!os) throw IoError(path, "write failed");
}

}  // namespace beamkit
