#include <doctest.h>

#include <cmath>
#include <random>

#include "corpora.hpp"
#include "ecgmon/errors.hpp"
#include "ecgmon/sqa.hpp"
#include "oracles.hpp"

using namespace ecgmon;

TEST_SUITE("moving standard deviation") {
    TEST_CASE("constant input has zero deviation") {
        const std::vector<float> x(200, 3.25f);
        for (double s : moving_std(std::span<const float>(x), 20, 0.7)) {
            CHECK(s == doctest::Approx(0.0));
        }
    }

    TEST_CASE("unit step matches the direct oracle everywhere") {
        std::vector<float> x(100, 0.0f);
        for (size_t i = 50; i < 100; ++i) x[i] = 1.0f;
        const auto got = moving_std(std::span<const float>(x), 10, 0.7);
        const auto want = oracle::moving_std(x, 10, 0.7);
        REQUIRE(got.size() == want.size());
        for (size_t i = 0; i < got.size(); ++i) {
            CHECK(std::abs(got[i] - want[i]) <= 1e-9);
        }
    }

    TEST_CASE("output count for the canonical window") {
        const std::vector<float> x(1300, 1.0f);
        // hop = round(52 * 0.3) = 16 -> floor((1300-52)/16) + 1 = 79
        CHECK(moving_std(std::span<const float>(x), 52, 0.7).size() == 79);
    }

    TEST_CASE("oracle equivalence on random signals") {
        std::mt19937 rng(23);
        std::normal_distribution<float> dist(0.0f, 1.0f);
        std::uniform_int_distribution<int> len_dist(60, 400);
        std::uniform_int_distribution<int> win_dist(4, 52);
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<float> x(static_cast<size_t>(len_dist(rng)));
            for (auto& v : x) v = dist(rng);
            const int win = std::min<int>(win_dist(rng), static_cast<int>(x.size()));
            const auto got = moving_std(std::span<const float>(x), std::max(2, win), 0.7);
            const auto want = oracle::moving_std(x, std::max(2, win), 0.7);
            REQUIRE(got.size() == want.size());
            for (size_t i = 0; i < got.size(); ++i) {
                CHECK(std::abs(got[i] - want[i]) <= 1e-9);
            }
        }
    }

    TEST_CASE("window longer than signal is rejected") {
        const std::vector<float> x(10, 0.0f);
        CHECK_THROWS_AS(moving_std(std::span<const float>(x), 11, 0.7), ParameterError);
    }
}

namespace {

EcgSignal clean_window(uint32_t seed) {
    SynthSpec spec;
    spec.duration_s = 10.0;
    return generate_ecg(spec, seed).signal;
}

} // namespace

TEST_SUITE("window grading") {
    TEST_CASE("all-zero window is flat") {
        EcgSignal w;
        w.fs = 130.0;
        w.samples.assign(1300, 0.0f);
        const SqaVerdict v = grade_window(w, SqaConfig{});
        CHECK(v.grade == SqaGrade::unacceptable);
        CHECK(v.reason == SqaReason::flat);
    }

    TEST_CASE("clean synthetic window is acceptable with defaults") {
        for (uint32_t seed : {1u, 2u, 3u, 4u, 5u}) {
            const SqaVerdict v = grade_window(clean_window(seed), SqaConfig{});
            CAPTURE(seed);
            CAPTURE(v.mean_sigma);
            CHECK(v.grade == SqaGrade::acceptable);
            CHECK(v.reason == SqaReason::clean);
        }
    }

    TEST_CASE("mid-window amplitude step is rejected as an abrupt change") {
        SynthSpec spec;
        spec.duration_s = 10.0;
        spec.noise.step_time_s = 5.0;
        spec.noise.step_amplitude = 5.0;
        const SqaVerdict v = grade_window(generate_ecg(spec, 8).signal, SqaConfig{});
        CHECK(v.grade == SqaGrade::unacceptable);
        CHECK(v.reason == SqaReason::abrupt_change);
    }

    TEST_CASE("grading is amplitude-scale invariant") {
        const EcgSignal w = clean_window(12);
        for (double c : {0.01, 0.3, 7.0, 500.0}) {
            EcgSignal scaled = w;
            for (auto& v : scaled.samples) v = static_cast<float>(v * c);
            const SqaVerdict a = grade_window(w, SqaConfig{});
            const SqaVerdict b = grade_window(scaled, SqaConfig{});
            CHECK(a.grade == b.grade);
            CHECK(a.reason == b.reason);
        }
    }

    TEST_CASE("verdict is stable under repeated calls") {
        const EcgSignal w = clean_window(77);
        const SqaVerdict a = grade_window(w, SqaConfig{});
        const SqaVerdict b = grade_window(w, SqaConfig{});
        CHECK(a.grade == b.grade);
        CHECK(a.reason == b.reason);
        CHECK(a.mean_sigma == b.mean_sigma);
    }

    TEST_CASE("wrong window duration is rejected") {
        EcgSignal w;
        w.fs = 130.0;
        w.samples.assign(650, 1.0f); // 5 s
        CHECK_THROWS_AS(grade_window(w, SqaConfig{}), ParameterError);
    }

    TEST_CASE("inverted polarity flips the abrupt-change rule") {
        SqaConfig cfg;
        cfg.polarity = SqaPolarity::inverted;
        const SqaVerdict v = grade_window(clean_window(5), cfg);
        CHECK(v.grade == SqaGrade::unacceptable);
    }
}

TEST_SUITE("record grading") {
    TEST_CASE("tiles a record into full windows") {
        SynthSpec spec;
        spec.duration_s = 35.0;
        const auto verdicts = grade_record(generate_ecg(spec, 3).signal, SqaConfig{});
        CHECK(verdicts.size() == 3);
    }

    TEST_CASE("sub-window record yields nothing") {
        EcgSignal s;
        s.fs = 130.0;
        s.samples.assign(65, 1.0f); // 0.5 s
        CHECK(grade_record(s, SqaConfig{}).empty());
    }

    TEST_CASE("clean head and dropped-out tail split the verdicts") {
        SynthSpec spec;
        spec.duration_s = 60.0;
        spec.noise.dropout_start_s = 30.0;
        spec.noise.dropout_duration_s = 30.0;
        const auto verdicts = grade_record(generate_ecg(spec, 4).signal, SqaConfig{});
        REQUIRE(verdicts.size() == 6);
        for (size_t i = 0; i < 3; ++i) {
            CAPTURE(i);
            CHECK(verdicts[i].second.grade == SqaGrade::acceptable);
        }
        for (size_t i = 3; i < 6; ++i) {
            CAPTURE(i);
            CHECK(verdicts[i].second.grade == SqaGrade::unacceptable);
        }
    }
}

TEST_SUITE("grading corpus") {
    TEST_CASE("accuracy over 200 clean + 200 corrupted windows") {
        const corpora::SqaCorpus corpus = corpora::make_sqa_corpus(200, 200, 20260101);
        const SqaConfig cfg;
        long correct = 0;
        for (const auto& w : corpus.clean) {
            if (grade_window(w, cfg).grade == SqaGrade::acceptable) ++correct;
        }
        for (const auto& w : corpus.corrupted) {
            if (grade_window(w, cfg).grade == SqaGrade::unacceptable) ++correct;
        }
        const double acc = static_cast<double>(correct) / 400.0;
        CAPTURE(acc);
        CHECK(acc >= 0.95);
    }
}
