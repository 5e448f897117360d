#pragma once

#include <string>

#include "beamkit/stft.hpp"

namespace beamkit {

enum class SampleFormat { Pcm16, Float32 };

/// Reads a RIFF/WAVE file: 16-bit PCM or 32-bit IEEE float, any channel count,
/// plain or WAVE_FORMAT_EXTENSIBLE headers. Throws IoError with the path.
Waveform read_wav(const std::string& path);

/// Writes interleaved samples. Pcm16 clips to [-1, 1).
void write_wav(const std::string& path, const Waveform& w, SampleFormat format = SampleFormat::Float32);

}  // namespace beamkit
