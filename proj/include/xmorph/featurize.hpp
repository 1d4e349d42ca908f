#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <utility>
#include <vector>

namespace xmorph {

enum class SignalKind { AudioWave, JointEffort, EndpointForce };

// Raw sensor stream, channels x samples. Audio is single-channel.
struct RawSignal {
    SignalKind kind = SignalKind::AudioWave;
    double sample_rate = 0.0;  // Hz, audio only
    Eigen::MatrixXd data;

    Eigen::Index channels() const { return data.rows(); }
    Eigen::Index samples() const { return data.cols(); }
};

// Flattened row-major grid of bin means.
struct BinnedFeature {
    Eigen::VectorXd values;
    int rows = 0;
    int cols = 0;
};

struct MelConfig {
    int fft_window = 1024;
    int hop = 512;
    int mel_bands = 60;
};

// Splits [0, n) into `parts` contiguous ranges; the first n % parts ranges
// get one extra element.
std::vector<std::pair<int, int>> even_partition(int n, int parts);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Triangular HTK-mel filters spanning 0 Hz..Nyquist; bands x (fft/2 + 1).
Eigen::MatrixXd mel_filter_bank(int fft_window, double sample_rate, int mel_bands);

// Periodic Hann window of length n.
Eigen::VectorXd hann_window(int n);

// Power STFT (no centering, no padding); (fft/2 + 1) x frames.
Eigen::MatrixXd power_spectrogram(const Eigen::VectorXd& wave, int fft_window, int hop);

// bands x frames, frames = 1 + (samples - fft_window) / hop.
Eigen::MatrixXd mel_spectrogram(const RawSignal& signal, const MelConfig& config = {});

BinnedFeature spectro_temporal_histogram(const Eigen::MatrixXd& spectrogram, int rows = 10, int cols = 10);

// Per-channel means over `bins` temporal intervals, channels concatenated.
BinnedFeature temporal_bin(const RawSignal& signal, int bins = 10);

// Full default pipeline for any signal kind (audio: mel + 10x10 histogram).
BinnedFeature featurize_signal(const RawSignal& signal);

// 16-bit PCM or 32-bit float mono WAV.
RawSignal read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const Eigen::VectorXd& samples, int sample_rate);

// One row per timestep, one column per channel; no header.
RawSignal read_time_series_csv(const std::filesystem::path& path, SignalKind kind);

}  // namespace xmorph
