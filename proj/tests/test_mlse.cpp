#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "acmd/metrics.hpp"
#include "acmd/mlse.hpp"
#include "acmd/signal.hpp"

using namespace acmd;

namespace {

// Exhaustive minimization of the sequence metric with zero initial history;
// the independent oracle for the Viterbi search.
std::pair<std::vector<double>, double> brute_force_mlse(const std::vector<double>& v,
                                                        const std::vector<double>& w, int m_ord,
                                                        const std::vector<double>* prefix = nullptr) {
    const std::size_t n = v.size();
    const std::size_t p = w.size() - 1;
    const std::size_t fixed = prefix ? prefix->size() : 0;
    std::vector<int> digits(n, 0);
    std::vector<double> best_seq;
    double best = std::numeric_limits<double>::infinity();
    const long total = static_cast<long>(std::pow(m_ord, static_cast<double>(n - fixed)) + 0.5);
    for (long it = 0; it < total; ++it) {
        long x = it;
        for (std::size_t i = fixed; i < n; ++i) {
            digits[i] = static_cast<int>(x % m_ord);
            x /= m_ord;
        }
        std::vector<double> s(n);
        for (std::size_t i = 0; i < n; ++i)
            s[i] = i < fixed ? (*prefix)[i] : pam_level(digits[i], m_ord);
        double d = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            double c = 0.0;
            for (std::size_t i = 0; i <= p && i <= k; ++i) c += w[i] * s[k - i];
            d += (v[k] - c) * (v[k] - c);
        }
        if (d < best) {
            best = d;
            best_seq = s;
        }
    }
    return {best_seq, best};
}

std::vector<double> ar1_noise(SeededRng& rng, std::size_t n, double a, double sigma = 1.0) {
    std::vector<double> z(n, 0.0);
    double prev = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        prev = a * prev + sigma * rng.normal();
        z[i] = prev;
    }
    return z;
}

double octave_band_ratio_db(const std::vector<double>& x) {
    const PsdEstimate psd = welch_psd(RealSignal{x, 1.0}, 1024, 0.5);
    const double fny = 0.5;
    double lo = 1e300, hi = -1e300;
    for (double edge : {fny / 16.0, fny / 8.0, fny / 4.0, fny / 2.0}) {
        double acc = 0.0;
        long cnt = 0;
        for (std::size_t k = 0; k < psd.frequencies_hz.size(); ++k) {
            if (psd.frequencies_hz[k] >= edge && psd.frequencies_hz[k] < 2.0 * edge) {
                acc += undb10(psd.power_db[k]);
                ++cnt;
            }
        }
        const double band = acc / static_cast<double>(cnt);
        lo = std::min(lo, band);
        hi = std::max(hi, band);
    }
    return db10(hi / lo);
}

} // namespace

TEST_CASE("estimate_noise recovers the additive error exactly in-range") {
    const std::vector<double> clean{1.0, -1.0, 1.0, 1.0, -1.0};
    const auto z0 = estimate_noise(clean, 2);
    for (double v : z0) REQUIRE(v == 0.0);

    SeededRng rng(3);
    std::vector<double> v(64), g(64);
    for (std::size_t i = 0; i < v.size(); ++i) {
        g[i] = 0.4 * (rng.uniform01() - 0.5); // |g| < decision distance
        v[i] = (rng.bit() ? 1.0 : -1.0) + g[i];
    }
    const auto z = estimate_noise(v, 2);
    for (std::size_t i = 0; i < v.size(); ++i) REQUIRE(z[i] == Catch::Approx(g[i]).margin(1e-15));
}

TEST_CASE("estimate_noise variance matches the injected noise (monte carlo)") {
    SeededRng rng(11);
    const std::size_t n = 100000;
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = (rng.bit() ? 1.0 : -1.0) + 0.1 * rng.normal();
    const auto z = estimate_noise(v, 2);
    REQUIRE(variance(z) == Catch::Approx(0.01).epsilon(0.10));
}

TEST_CASE("autocorrelation of white and ar1 noise") {
    SeededRng rng(5);
    const std::size_t n = 100000;
    std::vector<double> white(n);
    for (auto& v : white) v = rng.normal();
    const NoiseAutocorr rw = autocorrelation(white, 4);
    REQUIRE(rw.r[0] == Catch::Approx(1.0).margin(3.0 / std::sqrt(static_cast<double>(n))));
    for (int k = 1; k <= 4; ++k)
        REQUIRE(std::abs(rw.r[static_cast<std::size_t>(k)]) <
                3.0 / std::sqrt(static_cast<double>(n)));

    const auto z = ar1_noise(rng, n, 0.5);
    const NoiseAutocorr ra = autocorrelation(z, 3);
    for (int k = 1; k <= 3; ++k)
        REQUIRE(ra.r[static_cast<std::size_t>(k)] / ra.r[0] ==
                Catch::Approx(std::pow(0.5, k)).epsilon(0.05));
}

TEST_CASE("autocorrelation rejects degenerate input") {
    const std::vector<double> cst(1000, 1.3);
    REQUIRE_THROWS_AS(autocorrelation(cst, 1), ConditioningError);
    const std::vector<double> tiny(50, 1.0);
    REQUIRE_THROWS_AS(autocorrelation(tiny, 1), ParameterError);
}

TEST_CASE("yule_walker solves the hand-checked 2x2 system") {
    NoiseAutocorr ac;
    ac.r = {1.0, 0.5};
    const PostFilterTaps pf = yule_walker(ac);
    REQUIRE(pf.w[0] == Catch::Approx(4.0 / 3.0).margin(1e-12));
    REQUIRE(pf.w[1] == Catch::Approx(-2.0 / 3.0).margin(1e-12));
    REQUIRE(pf.w[1] / pf.w[0] == Catch::Approx(-0.5).margin(1e-12));
}

TEST_CASE("yule_walker on white noise is the identity filter") {
    NoiseAutocorr ac;
    ac.r = {2.0, 0.0, 0.0, 0.0};
    const PostFilterTaps pf = yule_walker(ac);
    REQUIRE(pf.w[0] == Catch::Approx(1.0).margin(1e-12));
    for (std::size_t i = 1; i < pf.w.size(); ++i) REQUIRE(pf.w[i] == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("yule_walker solution satisfies the defining system") {
    SeededRng rng(13);
    const std::size_t n = 50000;
    // colored noise: two cascaded AR(1) sections
    std::vector<double> z(n, 0.0);
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        s1 = 0.7 * s1 + rng.normal();
        s2 = -0.4 * s2 + s1;
        z[i] = s2;
    }
    const NoiseAutocorr ac = autocorrelation(z, 6);
    const PostFilterTaps pf = yule_walker(ac);
    // residual of Toeplitz(R) * w - [R0, 0, ..., 0]
    for (std::size_t row = 0; row < pf.w.size(); ++row) {
        double acc = 0.0;
        for (std::size_t col = 0; col < pf.w.size(); ++col) {
            const std::size_t lag = row > col ? row - col : col - row;
            acc += ac.r[lag] * pf.w[col];
        }
        const double want = row == 0 ? ac.r[0] : 0.0;
        REQUIRE(std::abs(acc - want) < 1e-9 * ac.r[0]);
    }
}

TEST_CASE("post_filter convolution basics") {
    PostFilterTaps id;
    id.w = {1.0};
    const std::vector<double> q{0.3, -0.7, 2.0};
    REQUIRE(post_filter(q, id) == q);

    PostFilterTaps t;
    t.w = {1.0, -0.5};
    const auto v = post_filter({1.0, 1.0, 1.0}, t);
    REQUIRE(v[0] == Catch::Approx(1.0));
    REQUIRE(v[1] == Catch::Approx(0.5));
    REQUIRE(v[2] == Catch::Approx(0.5));
}

TEST_CASE("matched post filter whitens ar1 noise") {
    SeededRng rng(17);
    const std::size_t n = 100000;
    const auto z = ar1_noise(rng, n, 0.5);
    REQUIRE(octave_band_ratio_db(z) > 3.0); // colored before

    const PostFilterTaps pf = yule_walker(autocorrelation(z, 1));
    const auto v = post_filter(z, pf);
    REQUIRE(octave_band_ratio_db(v) < 3.0); // flat after
}

TEST_CASE("mlse with zero memory is the symbol slicer") {
    PostFilterTaps pf;
    pf.w = {1.0};
    const MlseDetector det(2, pf);
    REQUIRE(det.state_count() == 1);
    const std::vector<double> v{0.4, -0.1, 2.0, -3.0, 0.0};
    const auto out = mlse_detect(v, det);
    const std::vector<double> want{1.0, -1.0, 1.0, -1.0, 1.0};
    REQUIRE(out == want);
}

TEST_CASE("mlse recovers a noiseless sequence through known isi") {
    PostFilterTaps pf;
    pf.w = {1.0, 0.5};
    const MlseDetector det(2, pf);
    const std::vector<double> s{1.0, -1.0, 1.0};
    std::vector<double> v(s.size(), 0.0);
    for (std::size_t k = 0; k < s.size(); ++k) {
        v[k] = s[k];
        if (k > 0) v[k] += 0.5 * s[k - 1];
    }
    REQUIRE(mlse_detect(v, det) == s);
}

TEST_CASE("viterbi equals exhaustive minimization over 1000 random instances") {
    SeededRng rng(19);
    int trials = 0;
    while (trials < 1000) {
        const int p = 1 + static_cast<int>(rng.next_u64() % 3);
        const std::size_t n = 4 + static_cast<std::size_t>(rng.next_u64() % 9); // 4..12
        if (n < static_cast<std::size_t>(p) + 1) continue;
        PostFilterTaps pf;
        pf.w.resize(static_cast<std::size_t>(p) + 1);
        for (auto& w : pf.w) w = rng.normal();
        std::vector<double> s(n);
        for (auto& v : s) v = rng.bit() ? 1.0 : -1.0;
        std::vector<double> v(n, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            for (std::size_t i = 0; i <= static_cast<std::size_t>(p) && i <= k; ++i)
                v[k] += pf.w[i] * s[k - i];
            v[k] += 0.5 * rng.normal();
        }
        const MlseDetector det(2, pf);
        const auto got = mlse_detect(v, det);
        const auto [want, dist] = brute_force_mlse(v, pf.w, 2);
        REQUIRE(got == want);
        ++trials;
    }
}

TEST_CASE("viterbi with a pinned prefix equals constrained exhaustive search") {
    SeededRng rng(23);
    for (int trial = 0; trial < 200; ++trial) {
        const int p = 1 + static_cast<int>(rng.next_u64() % 2);
        const std::size_t n = 8 + static_cast<std::size_t>(rng.next_u64() % 4);
        PostFilterTaps pf;
        pf.w.resize(static_cast<std::size_t>(p) + 1);
        for (auto& w : pf.w) w = rng.normal();
        std::vector<double> s(n), v(n, 0.0);
        for (auto& x : s) x = rng.bit() ? 1.0 : -1.0;
        for (std::size_t k = 0; k < n; ++k) {
            for (std::size_t i = 0; i <= static_cast<std::size_t>(p) && i <= k; ++i)
                v[k] += pf.w[i] * s[k - i];
            v[k] += 0.4 * rng.normal();
        }
        std::vector<double> prefix(s.begin(), s.begin() + 4);
        const MlseDetector det(2, pf);
        const auto got = mlse_detect(v, det, &prefix);
        const auto [want, dist] = brute_force_mlse(v, pf.w, 2, &prefix);
        REQUIRE(got == want);
    }
}

TEST_CASE("detector reports the advertised state count and budget") {
    PostFilterTaps pf;
    pf.w.assign(15, 0.1); // P = 14
    const MlseDetector det(2, pf);
    REQUIRE(det.state_count() == 16384);
    REQUIRE(det.traceback_depth() >= 5 * det.memory());

    PostFilterTaps big;
    big.w.assign(18, 0.1); // P = 17 exceeds the 2^16 default budget
    REQUIRE_THROWS_AS(MlseDetector(2, big), CapacityError);
}

TEST_CASE("acmd_detect on white high-snr input reduces to threshold detection") {
    SeededRng rng(29);
    const std::size_t n = 20000;
    std::vector<double> q(n);
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = rng.bit() ? 1.0 : -1.0;
        q[i] = s[i] + 0.05 * rng.normal();
    }
    const AcmdDetectResult res = acmd_detect(q, 3);
    REQUIRE(res.post_filter_taps.w[0] == Catch::Approx(1.0).margin(0.02));
    for (std::size_t i = 1; i < res.post_filter_taps.w.size(); ++i)
        REQUIRE(std::abs(res.post_filter_taps.w[i]) < 0.02);
    for (std::size_t i = 0; i < n; ++i) REQUIRE(res.decisions[i] == s[i]);
}

TEST_CASE("acmd_detect pipeline handles colored noise end to end") {
    SeededRng rng(31);
    const std::size_t n = 40000;
    const auto noise = ar1_noise(rng, n, 0.6, 0.35);
    std::vector<double> q(n), s(n);
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = rng.bit() ? 1.0 : -1.0;
        q[i] = s[i] + noise[i];
    }
    std::vector<double> prefix(s.begin(), s.begin() + 4000);

    long errors_plain = 0;
    for (std::size_t i = 4000; i < n; ++i)
        if (nearest_symbol(q[i], 2) != s[i]) ++errors_plain;

    const AcmdDetectResult res = acmd_detect(q, 4, &prefix);
    long errors_acmd = 0;
    for (std::size_t i = 4000; i < n; ++i)
        if (res.decisions[i] != s[i]) ++errors_acmd;

    REQUIRE(errors_acmd * 2 < errors_plain); // whitening + mlse beats slicing
}
