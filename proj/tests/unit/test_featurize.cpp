#include "../oracles/oracles.hpp"
#include "helpers.hpp"

#include "xmorph/error.hpp"
#include "xmorph/featurize.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>

using namespace xmorph;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error raised");
    return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("even_partition covers the range") {
    for (int n : {10, 11, 19, 100, 101}) {
        for (int parts : {1, 3, 10}) {
            const auto p = even_partition(n, parts);
            REQUIRE(p.size() == static_cast<std::size_t>(parts));
            CHECK(p.front().first == 0);
            CHECK(p.back().second == n);
            for (std::size_t i = 1; i < p.size(); ++i) CHECK(p[i].first == p[i - 1].second);
        }
    }
}

TEST_CASE("temporal_bin matches enumeration") {
    std::mt19937_64 rng(3);
    for (int n : {10, 37, 100, 1234}) {
        for (int ch : {1, 3, 7}) {
            RawSignal s{SignalKind::JointEffort, 0.0, testing::random_matrix(rng, ch, n)};
            const auto f = temporal_bin(s, 10);
            CHECK(f.values.size() == ch * 10);
            CHECK(f.values == oracle::temporal_bin(s.data, 10));
        }
    }
    SUBCASE("ramp 0..99 in 10 bins has bin means 4.5, 14.5, ...") {
        Eigen::MatrixXd ramp(1, 100);
        for (int i = 0; i < 100; ++i) ramp(0, i) = i;
        const auto f = temporal_bin({SignalKind::EndpointForce, 0.0, ramp}, 10);
        for (int b = 0; b < 10; ++b) CHECK(f.values[b] == doctest::Approx(10.0 * b + 4.5));
    }
    CHECK(code_of([] { temporal_bin({SignalKind::JointEffort, 0.0, Eigen::MatrixXd::Ones(2, 9)}, 10); }) ==
          ErrorCode::TooFewSamples);
}

TEST_CASE("spectro_temporal_histogram matches enumeration") {
    std::mt19937_64 rng(4);
    for (auto [r, c] : {std::pair{60, 86}, std::pair{60, 10}, std::pair{13, 27}}) {
        const Eigen::MatrixXd s = testing::random_matrix(rng, r, c).cwiseAbs();
        const auto f = spectro_temporal_histogram(s, 10, 10);
        CHECK(f.values.size() == 100);
        CHECK(f.values == oracle::histogram(s, 10, 10));
    }
    CHECK(code_of([] { spectro_temporal_histogram(Eigen::MatrixXd::Ones(60, 9), 10, 10); }) == ErrorCode::TooFewFrames);
    CHECK(code_of([] { spectro_temporal_histogram(Eigen::MatrixXd::Ones(9, 60), 10, 10); }) == ErrorCode::TooFewBands);
}

TEST_CASE("mel spectrogram of sine probes matches a naive DFT") {
    const double sr = 16000.0;
    const int n = 256, hop = 128, bands = 20;
    for (double freq : {440.0, 1000.0, 3150.0}) {
        Eigen::VectorXd wave(4 * n);
        for (int i = 0; i < wave.size(); ++i) wave[i] = std::sin(2.0 * std::numbers::pi * freq * i / sr);
        const RawSignal s{SignalKind::AudioWave, sr, wave.transpose()};
        const Eigen::MatrixXd got = mel_spectrogram(s, {n, hop, bands});
        const Eigen::MatrixXd want = oracle::mel_spectrogram(wave, sr, n, hop, bands);
        REQUIRE(got.rows() == want.rows());
        REQUIRE(got.cols() == want.cols());
        const double scale = want.cwiseAbs().maxCoeff();
        CHECK((got - want).cwiseAbs().maxCoeff() / scale < 1e-6);
        // the loudest band contains the probe frequency
        Eigen::Index band = 0;
        want.col(0).maxCoeff(&band);
        Eigen::Index got_band = 0;
        got.col(0).maxCoeff(&got_band);
        CHECK(band == got_band);
    }
}

TEST_CASE("default feature dimensionalities") {
    RawSignal audio{SignalKind::AudioWave, 44100.0, Eigen::MatrixXd::Zero(1, 44100)};
    audio.data.row(0) = Eigen::VectorXd::LinSpaced(44100, -1.0, 1.0).transpose();
    const auto mel = mel_spectrogram(audio);
    CHECK(mel.rows() == 60);
    CHECK(mel.cols() == 1 + (44100 - 1024) / 512);
    CHECK(featurize_signal(audio).values.size() == 100);
    CHECK(featurize_signal({SignalKind::EndpointForce, 0.0, Eigen::MatrixXd::Ones(3, 50)}).values.size() == 30);
    CHECK(featurize_signal({SignalKind::JointEffort, 0.0, Eigen::MatrixXd::Ones(7, 50)}).values.size() == 70);
    CHECK(featurize_signal({SignalKind::JointEffort, 0.0, Eigen::MatrixXd::Ones(6, 50)}).values.size() == 60);
    CHECK(code_of([] { power_spectrogram(Eigen::VectorXd::Zero(1000), 1024, 512); }) == ErrorCode::SignalTooShort);
}

TEST_CASE("mel scale and window helpers") {
    CHECK(hz_to_mel(0.0) == 0.0);
    CHECK(mel_to_hz(hz_to_mel(1234.5)) == doctest::Approx(1234.5));
    CHECK(hz_to_mel(700.0) == doctest::Approx(2595.0 * std::log10(2.0)));
    const auto w = hann_window(8);
    CHECK(w[0] == 0.0);
    CHECK(w[4] == doctest::Approx(1.0));
    const auto bank = mel_filter_bank(1024, 44100.0, 60);
    CHECK(bank.rows() == 60);
    CHECK(bank.cols() == 513);
    CHECK(bank.minCoeff() >= 0.0);
    CHECK(bank.maxCoeff() <= 1.0);
}

TEST_CASE("wav and csv readers") {
    const auto dir = testing::scratch_dir("featurize-io");
    Eigen::VectorXd wave(2048);
    for (int i = 0; i < wave.size(); ++i) wave[i] = 0.5 * std::sin(0.01 * i);
    write_wav(dir / "probe.wav", wave, 8000);
    const RawSignal back = read_wav(dir / "probe.wav");
    CHECK(back.sample_rate == 8000.0);
    CHECK(back.channels() == 1);
    REQUIRE(back.samples() == 2048);
    CHECK((back.data.row(0).transpose() - wave).cwiseAbs().maxCoeff() < 1e-6);

    // 16-bit PCM written by hand
    {
        std::ofstream out(dir / "pcm.wav", std::ios::binary);
        auto u32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
        auto u16 = [&](std::uint16_t v) { out.write(reinterpret_cast<const char*>(&v), 2); };
        out.write("RIFF", 4);
        u32(36 + 8);
        out.write("WAVEfmt ", 8);
        u32(16);
        u16(1);
        u16(1);
        u32(8000);
        u32(16000);
        u16(2);
        u16(16);
        out.write("data", 4);
        u32(8);
        for (std::int16_t v : {std::int16_t{0}, std::int16_t{16384}, std::int16_t{-32768}, std::int16_t{32767}}) {
            out.write(reinterpret_cast<const char*>(&v), 2);
        }
    }
    const RawSignal pcm = read_wav(dir / "pcm.wav");
    REQUIRE(pcm.samples() == 4);
    CHECK(pcm.data(0, 1) == doctest::Approx(0.5));
    CHECK(pcm.data(0, 2) == doctest::Approx(-1.0));

    std::ofstream(dir / "force.csv") << "1,2,3\n4,5,6\n";
    const RawSignal f = read_time_series_csv(dir / "force.csv", SignalKind::EndpointForce);
    CHECK(f.channels() == 3);
    CHECK(f.samples() == 2);
    CHECK(f.data(2, 1) == 6.0);
    std::ofstream(dir / "force2.csv") << "1,2\n4,5\n";
    CHECK(code_of([&] { read_time_series_csv(dir / "force2.csv", SignalKind::EndpointForce); }) ==
          ErrorCode::DimensionMismatch);
    CHECK(code_of([&] { read_wav(dir / "nope.wav"); }) == ErrorCode::MissingFile);
}
