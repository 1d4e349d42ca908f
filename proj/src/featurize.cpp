#include "xmorph/featurize.hpp"

#include "xmorph/dataset.hpp"
#include "xmorph/error.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <memory>
#include <mutex>
#include <numbers>

namespace xmorph {

namespace {

// FFTW planning is not thread-safe; execution with new-array API is.
std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwPlan {
    fftw_plan plan = nullptr;
    ~FftwPlan() {
        if (plan) {
            std::lock_guard lock(fftw_planner_mutex());
            fftw_destroy_plan(plan);
        }
    }
};

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};

std::uint32_t read_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::ostream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u16(std::ostream& out, std::uint16_t v) {
    const unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
    out.write(reinterpret_cast<const char*>(b), 2);
}

}  // namespace

std::vector<std::pair<int, int>> even_partition(int n, int parts) {
    std::vector<std::pair<int, int>> out;
    out.reserve(parts);
    const int base = n / parts;
    const int extra = n % parts;
    int begin = 0;
    for (int i = 0; i < parts; ++i) {
        const int len = base + (i < extra ? 1 : 0);
        out.emplace_back(begin, begin + len);
        begin += len;
    }
    return out;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Eigen::MatrixXd mel_filter_bank(int fft_window, double sample_rate, int mel_bands) {
    if (fft_window < 2 || sample_rate <= 0.0 || mel_bands < 1) {
        throw Error(ErrorCode::InvalidArgument, "mel_filter_bank: bad parameters");
    }
    const int bins = fft_window / 2 + 1;
    const double mel_max = hz_to_mel(sample_rate / 2.0);
    std::vector<double> edges(mel_bands + 2);
    for (int i = 0; i < mel_bands + 2; ++i) {
        edges[i] = mel_to_hz(mel_max * i / (mel_bands + 1));
    }
    Eigen::MatrixXd bank = Eigen::MatrixXd::Zero(mel_bands, bins);
    for (int m = 0; m < mel_bands; ++m) {
        const double lo = edges[m], center = edges[m + 1], hi = edges[m + 2];
        for (int k = 0; k < bins; ++k) {
            const double f = k * sample_rate / fft_window;
            const double rising = (f - lo) / (center - lo);
            const double falling = (hi - f) / (hi - center);
            bank(m, k) = std::max(0.0, std::min(rising, falling));
        }
    }
    return bank;
}

Eigen::VectorXd hann_window(int n) {
    Eigen::VectorXd w(n);
    for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
    return w;
}

Eigen::MatrixXd power_spectrogram(const Eigen::VectorXd& wave, int fft_window, int hop) {
    if (fft_window < 2 || hop < 1) throw Error(ErrorCode::InvalidArgument, "power_spectrogram: bad window/hop");
    if (wave.size() < fft_window) {
        throw Error(ErrorCode::SignalTooShort, std::to_string(wave.size()) + " samples < window " +
                                                   std::to_string(fft_window));
    }
    const int frames = 1 + static_cast<int>((wave.size() - fft_window) / hop);
    const int bins = fft_window / 2 + 1;
    const Eigen::VectorXd window = hann_window(fft_window);

    std::unique_ptr<double, FftwFree> in(static_cast<double*>(fftw_malloc(sizeof(double) * fft_window)));
    std::unique_ptr<fftw_complex, FftwFree> out(
        static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * bins)));
    FftwPlan plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan.plan = fftw_plan_dft_r2c_1d(fft_window, in.get(), out.get(), FFTW_ESTIMATE);
    }

    Eigen::MatrixXd power(bins, frames);
    for (int t = 0; t < frames; ++t) {
        const Eigen::Index start = static_cast<Eigen::Index>(t) * hop;
        for (int n = 0; n < fft_window; ++n) in.get()[n] = wave[start + n] * window[n];
        fftw_execute(plan.plan);
        for (int k = 0; k < bins; ++k) {
            const double re = out.get()[k][0], im = out.get()[k][1];
            power(k, t) = re * re + im * im;
        }
    }
    return power;
}

Eigen::MatrixXd mel_spectrogram(const RawSignal& signal, const MelConfig& config) {
    if (signal.kind != SignalKind::AudioWave || signal.channels() != 1) {
        throw Error(ErrorCode::InvalidArgument, "mel_spectrogram expects a single-channel audio wave");
    }
    if (signal.sample_rate <= 0.0) throw Error(ErrorCode::InvalidArgument, "audio sample rate must be positive");
    if (config.mel_bands < 1) throw Error(ErrorCode::InvalidArgument, "mel_bands must be >= 1");
    const Eigen::VectorXd wave = signal.data.row(0).transpose();
    const Eigen::MatrixXd power = power_spectrogram(wave, config.fft_window, config.hop);
    return mel_filter_bank(config.fft_window, signal.sample_rate, config.mel_bands) * power;
}

namespace {

// Mean of rows [r0, r1) x cols [c0, c1), summed row by row in index order.
double ordered_mean(const Eigen::MatrixXd& x, int r0, int r1, int c0, int c1) {
    double sum = 0.0;
    for (int r = r0; r < r1; ++r) {
        for (int c = c0; c < c1; ++c) sum += x(r, c);
    }
    return sum / static_cast<double>((r1 - r0) * (c1 - c0));
}

}  // namespace

BinnedFeature spectro_temporal_histogram(const Eigen::MatrixXd& spectrogram, int rows, int cols) {
    if (rows < 1 || cols < 1) throw Error(ErrorCode::InvalidArgument, "bin counts must be >= 1");
    if (spectrogram.rows() < rows) {
        throw Error(ErrorCode::TooFewBands, std::to_string(spectrogram.rows()) + " bands < " + std::to_string(rows));
    }
    if (spectrogram.cols() < cols) {
        throw Error(ErrorCode::TooFewFrames, std::to_string(spectrogram.cols()) + " frames < " + std::to_string(cols));
    }
    const auto band_bins = even_partition(static_cast<int>(spectrogram.rows()), rows);
    const auto frame_bins = even_partition(static_cast<int>(spectrogram.cols()), cols);
    BinnedFeature out{Eigen::VectorXd(rows * cols), rows, cols};
    for (int r = 0; r < rows; ++r) {
        const auto [r0, r1] = band_bins[r];
        for (int c = 0; c < cols; ++c) {
            const auto [c0, c1] = frame_bins[c];
            out.values[r * cols + c] = ordered_mean(spectrogram, r0, r1, c0, c1);
        }
    }
    return out;
}

BinnedFeature temporal_bin(const RawSignal& signal, int bins) {
    if (bins < 1) throw Error(ErrorCode::InvalidArgument, "bins must be >= 1");
    if (signal.samples() < bins) {
        throw Error(ErrorCode::TooFewSamples, std::to_string(signal.samples()) + " samples < " + std::to_string(bins));
    }
    const auto ranges = even_partition(static_cast<int>(signal.samples()), bins);
    const int channels = static_cast<int>(signal.channels());
    BinnedFeature out{Eigen::VectorXd(channels * bins), channels, bins};
    for (int ch = 0; ch < channels; ++ch) {
        for (int b = 0; b < bins; ++b) {
            const auto [s0, s1] = ranges[b];
            out.values[ch * bins + b] = ordered_mean(signal.data, ch, ch + 1, s0, s1);
        }
    }
    return out;
}

BinnedFeature featurize_signal(const RawSignal& signal) {
    if (signal.kind == SignalKind::AudioWave) {
        return spectro_temporal_histogram(mel_spectrogram(signal), kTemporalBins, kTemporalBins);
    }
    return temporal_bin(signal, kTemporalBins);
}

RawSignal read_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::MissingFile, path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    auto bad = [&](const std::string& why) { return Error(ErrorCode::SchemaViolation, path.string() + ": " + why); };
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw bad("not a RIFF/WAVE file");
    }
    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    const unsigned char* data = nullptr;
    std::size_t data_len = 0;
    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const unsigned char* chunk = bytes.data() + pos;
        const std::uint32_t len = read_u32(chunk + 4);
        if (pos + 8 + len > bytes.size()) throw bad("truncated chunk");
        if (std::memcmp(chunk, "fmt ", 4) == 0 && len >= 16) {
            format = read_u16(chunk + 8);
            channels = read_u16(chunk + 10);
            rate = read_u32(chunk + 12);
            bits = read_u16(chunk + 22);
            if (format == 0xFFFE && len >= 26) format = read_u16(chunk + 32);  // extensible sub-format
        } else if (std::memcmp(chunk, "data", 4) == 0) {
            data = chunk + 8;
            data_len = len;
        }
        pos += 8 + len + (len & 1u);
    }
    if (!data || channels == 0) throw bad("missing fmt or data chunk");
    if (channels != 1) throw bad("expected a single-channel recording");
    RawSignal s;
    s.kind = SignalKind::AudioWave;
    s.sample_rate = rate;
    if (format == 1 && bits == 16) {
        const std::size_t n = data_len / 2;
        s.data.resize(1, static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            const auto v = static_cast<std::int16_t>(read_u16(data + 2 * i));
            s.data(0, static_cast<Eigen::Index>(i)) = v / 32768.0;
        }
    } else if (format == 3 && bits == 32) {
        const std::size_t n = data_len / 4;
        s.data.resize(1, static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint32_t raw = read_u32(data + 4 * i);
            float f;
            std::memcpy(&f, &raw, sizeof f);
            s.data(0, static_cast<Eigen::Index>(i)) = f;
        }
    } else {
        throw bad("unsupported encoding (need 16-bit PCM or 32-bit float)");
    }
    return s;
}

void write_wav(const std::filesystem::path& path, const Eigen::VectorXd& samples, int sample_rate) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    const auto data_len = static_cast<std::uint32_t>(samples.size() * 4);
    out.write("RIFF", 4);
    put_u32(out, 36 + data_len);
    out.write("WAVEfmt ", 8);
    put_u32(out, 16);
    put_u16(out, 3);  // IEEE float
    put_u16(out, 1);
    put_u32(out, static_cast<std::uint32_t>(sample_rate));
    put_u32(out, static_cast<std::uint32_t>(sample_rate) * 4);
    put_u16(out, 4);
    put_u16(out, 32);
    out.write("data", 4);
    put_u32(out, data_len);
    for (Eigen::Index i = 0; i < samples.size(); ++i) {
        const float f = static_cast<float>(samples[i]);
        std::uint32_t raw;
        std::memcpy(&raw, &f, sizeof raw);
        put_u32(out, raw);
    }
}

RawSignal read_time_series_csv(const std::filesystem::path& path, SignalKind kind) {
    const auto rows = read_feature_csv(path);
    if (rows.empty()) throw Error(ErrorCode::TooFewSamples, path.string() + ": no samples");
    const std::size_t channels = rows.front().size();
    RawSignal s;
    s.kind = kind;
    s.data.resize(static_cast<Eigen::Index>(channels), static_cast<Eigen::Index>(rows.size()));
    for (std::size_t t = 0; t < rows.size(); ++t) {
        if (rows[t].size() != channels) {
            throw Error(ErrorCode::SchemaViolation, path.string() + ": ragged row " + std::to_string(t + 1));
        }
        for (std::size_t c = 0; c < channels; ++c) {
            s.data(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(t)) = rows[t][c];
        }
    }
    if (kind == SignalKind::EndpointForce && channels != 3) {
        throw Error(ErrorCode::DimensionMismatch, path.string() + ": force needs 3 axes");
    }
    return s;
}

}  // namespace xmorph
