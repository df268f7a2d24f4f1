#pragma once

// Stage 3 of the adaptive channel-matched receiver: estimate the residual
// noise from equalizer-output decisions, fit its autocorrelation, design the
// (P+1)-tap noise-whitening post filter through the Yule-Walker equations,
// and run an M^P-state Viterbi sequence detector against the post filter's
// own (fully known) ISI.
//
// Trellis conventions: symbols are digits base M, the state packs the P most
// recent symbols with the newest in the least significant digit, and the
// branch table indexes the (P+1)-symbol window the same way. Metric ties
// resolve toward the lexicographically smaller state, which keeps the
// detector deterministic. Survivors older than the traceback depth are
// committed through a windowed traceback.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "acmd/errors.hpp"
#include "acmd/signal.hpp"

namespace acmd {

struct NoiseAutocorr {
    std::vector<double> r; // lags 0..P
    int memory() const { return static_cast<int>(r.size()) - 1; }
};

struct PostFilterTaps {
    std::vector<double> w; // length P+1
    int memory() const { return static_cast<int>(w.size()) - 1; }
};

// z_n = v_n - v_hat_n with v_hat the nearest-alphabet decision; when a known
// prefix is supplied it replaces the decisions over that span.
inline std::vector<double> estimate_noise(const std::vector<double>& v, int modulation_order = 2,
                                          const std::vector<double>* known_prefix = nullptr) {
    std::vector<double> z(v.size());
    const std::size_t known = known_prefix ? std::min(known_prefix->size(), v.size()) : 0;
    for (std::size_t n = 0; n < v.size(); ++n) {
        const double ref = n < known ? (*known_prefix)[n] : nearest_symbol(v[n], modulation_order);
        z[n] = v[n] - ref;
    }
    return z;
}

namespace detail {

struct Levinson {
    std::vector<double> prediction_error_filter; // [1, a1, ..., aP]
    double error_power{0.0};
};

// Levinson-Durbin recursion on the symmetric Toeplitz system. Rejects
// non-positive-definite input (|reflection| >= 1 or vanishing error power)
// and systems conditioned worse than 1e12.
inline Levinson levinson_durbin(const std::vector<double>& r) {
    const std::size_t p = r.size() - 1;
    if (r.empty() || r[0] <= 0.0)
        throw ConditioningError("autocorrelation is not positive definite (R0 <= 0)");
    Levinson out;
    out.prediction_error_filter.assign(p + 1, 0.0);
    out.prediction_error_filter[0] = 1.0;
    out.error_power = r[0];
    std::vector<double>& a = out.prediction_error_filter;
    for (std::size_t i = 1; i <= p; ++i) {
        double acc = r[i];
        for (std::size_t j = 1; j < i; ++j) acc += a[j] * r[i - j];
        const double k = -acc / out.error_power;
        if (!std::isfinite(k) || std::abs(k) >= 1.0)
            throw ConditioningError("autocorrelation is not positive definite");
        for (std::size_t j = 1; j <= i / 2; ++j) {
            const double aj = a[j] + k * a[i - j];
            a[i - j] += k * a[j];
            a[j] = aj;
        }
        a[i] = k;
        out.error_power *= (1.0 - k * k);
        if (out.error_power <= 0.0)
            throw ConditioningError("autocorrelation is not positive definite");
    }
    if (r[0] / out.error_power > 1e12)
        throw ConditioningError("yule-walker system condition exceeds 1e12");
    return out;
}

} // namespace detail

// Biased autocorrelation estimate R_k = (1/N) sum z_n z_{n+k}, k = 0..P.
// The estimate is probed for positive definiteness so a degenerate input is
// rejected here instead of surfacing later in the solver.
inline NoiseAutocorr autocorrelation(const std::vector<double>& z, int memory) {
    if (memory < 0) throw ParameterError("autocorrelation memory must be >= 0");
    const std::size_t n = z.size();
    if (n < 100 * static_cast<std::size_t>(memory + 1))
        throw ParameterError("autocorrelation needs at least 100*(P+1) samples");
    // a (numerically) constant sequence makes the ideal Toeplitz matrix
    // rank one; reject it before the biased-estimator taper hides that
    if (memory >= 1 && variance(z) <= 1e-12 * mean_power(z))
        throw ConditioningError("autocorrelation of a constant sequence is singular");
    NoiseAutocorr ac;
    ac.r.assign(static_cast<std::size_t>(memory) + 1, 0.0);
    for (int k = 0; k <= memory; ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i + static_cast<std::size_t>(k) < n; ++i)
            acc += z[i] * z[i + static_cast<std::size_t>(k)];
        ac.r[static_cast<std::size_t>(k)] = acc / static_cast<double>(n);
    }
    detail::levinson_durbin(ac.r); // positive-definiteness probe
    return ac;
}

// Solve Toeplitz(R) * w = [R0, 0, ..., 0]^T. With E the final prediction
// error power the solution is (R0/E) * [1, a1, ..., aP].
inline PostFilterTaps yule_walker(const NoiseAutocorr& ac) {
    if (ac.r.empty()) throw ParameterError("empty autocorrelation");
    const detail::Levinson lv = detail::levinson_durbin(ac.r);
    PostFilterTaps pf;
    pf.w = lv.prediction_error_filter;
    const double scale = ac.r[0] / lv.error_power;
    for (double& v : pf.w) v *= scale;
    return pf;
}

// Plain causal FIR with zero initial history and no delay compensation: the
// ISI this filter introduces is exactly the channel the detector matches.
inline std::vector<double> post_filter(const std::vector<double>& q, const PostFilterTaps& taps) {
    if (taps.w.empty()) throw ParameterError("post filter needs at least one tap");
    for (double v : taps.w)
        if (!std::isfinite(v)) throw StateError("post filter taps are not finite");
    std::vector<double> v(q.size(), 0.0);
    const long p = static_cast<long>(taps.w.size());
    for (long n = 0; n < static_cast<long>(q.size()); ++n) {
        double acc = 0.0;
        const long jmax = std::min(p - 1, n);
        for (long j = 0; j <= jmax; ++j)
            acc += taps.w[static_cast<std::size_t>(j)] * q[static_cast<std::size_t>(n - j)];
        v[static_cast<std::size_t>(n)] = acc;
    }
    return v;
}

class MlseDetector {
  public:
    // The detector is constructed from the post filter taps so the channel
    // it matches is the exact filter that produced its input.
    MlseDetector(int modulation_order, const PostFilterTaps& pf, int traceback_depth = 0,
                 long state_budget = (1L << 16))
        : modulation_order_(modulation_order), w_(pf.w) {
        if (modulation_order_ < 2) throw ParameterError("modulation order must be >= 2");
        if (w_.empty()) throw ParameterError("detector needs at least one channel tap");
        memory_ = static_cast<int>(w_.size()) - 1;
        long states = 1;
        for (int i = 0; i < memory_; ++i) {
            states *= modulation_order_;
            if (states > state_budget)
                throw CapacityError("M^P exceeds the configured state budget");
        }
        state_count_ = states;
        traceback_depth_ = std::max({traceback_depth, 5 * memory_, 1});
    }

    int modulation_order() const { return modulation_order_; }
    int memory() const { return memory_; }
    long state_count() const { return state_count_; }
    int traceback_depth() const { return traceback_depth_; }
    const std::vector<double>& channel_taps() const { return w_; }

  private:
    int modulation_order_;
    std::vector<double> w_;
    int memory_{0};
    long state_count_{1};
    int traceback_depth_{1};
};

namespace detail {

inline int symbol_index(double s, int m_order) {
    const int idx = static_cast<int>(std::lround((s + static_cast<double>(m_order - 1)) / 2.0));
    return std::clamp(idx, 0, m_order - 1);
}

} // namespace detail

// Viterbi search minimizing sum_k [v_k - sum_i w_i s_{k-i}]^2. Without a
// prefix the trellis grows from an empty (zero) history, exactly matching an
// exhaustive minimization with zero initial history; with a known prefix of
// at least P symbols the start state is pinned to the prefix tail and the
// prefix is echoed through to keep the output aligned.
inline std::vector<double> mlse_detect(const std::vector<double>& v, const MlseDetector& det,
                                       const std::vector<double>* known_prefix = nullptr) {
    const int m_ord = det.modulation_order();
    const int p = det.memory();
    const long n_len = static_cast<long>(v.size());
    const std::vector<double>& w = det.channel_taps();

    std::vector<double> out(v.size(), 0.0);
    const long prefix_len =
        known_prefix ? std::min<long>(static_cast<long>(known_prefix->size()), n_len) : 0;

    if (p == 0) {
        for (long n = 0; n < n_len; ++n) {
            if (n < prefix_len) {
                out[static_cast<std::size_t>(n)] = (*known_prefix)[static_cast<std::size_t>(n)];
                continue;
            }
            double best = std::numeric_limits<double>::infinity();
            double pick = pam_level(0, m_ord);
            for (int a = 0; a < m_ord; ++a) {
                const double s = pam_level(a, m_ord);
                const double d = v[static_cast<std::size_t>(n)] - w[0] * s;
                if (d * d <= best) { // metric tie decides the upper level
                    best = d * d;
                    pick = s;
                }
            }
            out[static_cast<std::size_t>(n)] = pick;
        }
        return out;
    }

    const long s_count = det.state_count();
    const long s_high = s_count / m_ord; // M^(P-1)

    // channel output for every (P+1)-symbol window, newest symbol in the
    // least significant digit
    std::vector<double> table(static_cast<std::size_t>(s_count) * m_ord);
    for (long widx = 0; widx < static_cast<long>(table.size()); ++widx) {
        long x = widx;
        double acc = 0.0;
        for (int i = 0; i <= p; ++i) {
            acc += w[static_cast<std::size_t>(i)] * pam_level(static_cast<int>(x % m_ord), m_ord);
            x /= m_ord;
        }
        table[static_cast<std::size_t>(widx)] = acc;
    }

    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> cur(static_cast<std::size_t>(s_count), kInf);
    std::vector<double> nxt(static_cast<std::size_t>(s_count), kInf);

    const int depth = det.traceback_depth();
    const int ring = depth + 1;
    // survivor digit (dropped oldest symbol index) per state per ring slot
    std::vector<std::vector<std::uint8_t>> surv(
        static_cast<std::size_t>(ring),
        std::vector<std::uint8_t>(static_cast<std::size_t>(s_count), 0));

    long k0 = 0; // first trellis step
    if (prefix_len >= p) {
        long state = 0;
        long digit = 1;
        for (int j = 1; j <= p; ++j, digit *= m_ord) {
            const double s = (*known_prefix)[static_cast<std::size_t>(prefix_len - j)];
            state += static_cast<long>(detail::symbol_index(s, m_ord)) * digit;
        }
        cur[static_cast<std::size_t>(state)] = 0.0;
        k0 = prefix_len;
        for (long n = 0; n < prefix_len; ++n)
            out[static_cast<std::size_t>(n)] = (*known_prefix)[static_cast<std::size_t>(n)];
    } else {
        cur[0] = 0.0; // empty history
    }

    auto traceback_digit = [&](long from_state, long from_step, long to_step) {
        long s = from_state;
        for (long j = from_step; j > to_step; --j) {
            const std::uint8_t t = surv[static_cast<std::size_t>(j % ring)][static_cast<std::size_t>(s)];
            if (j - k0 < p && prefix_len < p) {
                s = s / m_ord; // growth-phase predecessor
            } else {
                s = s / m_ord + static_cast<long>(t) * s_high;
            }
        }
        return s % m_ord;
    };

    long states_valid = (prefix_len >= p) ? s_count : 1;
    for (long k = k0; k < n_len; ++k) {
        const long step = k - k0;
        const double vk = v[static_cast<std::size_t>(k)];
        std::fill(nxt.begin(), nxt.end(), kInf);
        auto& sv = surv[static_cast<std::size_t>(k % ring)];

        const bool growth = (step < p) && (prefix_len < p);
        const bool forced = k < prefix_len; // only possible in the growth path
        const int a_lo = forced ? detail::symbol_index((*known_prefix)[static_cast<std::size_t>(k)], m_ord) : 0;
        const int a_hi = forced ? a_lo + 1 : m_ord;

        if (growth) {
            for (long sigma = 0; sigma < states_valid; ++sigma) {
                if (cur[static_cast<std::size_t>(sigma)] == kInf) continue;
                for (int a = a_lo; a < a_hi; ++a) {
                    // on-the-fly branch metric with zero history beyond step
                    double c = w[0] * pam_level(a, m_ord);
                    long x = sigma;
                    for (long j = 1; j <= std::min<long>(step, p); ++j) {
                        c += w[static_cast<std::size_t>(j)] *
                             pam_level(static_cast<int>(x % m_ord), m_ord);
                        x /= m_ord;
                    }
                    const double d = vk - c;
                    const long next = a + sigma * m_ord;
                    const double cand = cur[static_cast<std::size_t>(sigma)] + d * d;
                    if (cand < nxt[static_cast<std::size_t>(next)]) {
                        nxt[static_cast<std::size_t>(next)] = cand;
                        sv[static_cast<std::size_t>(next)] = 0;
                    }
                }
            }
            states_valid = std::min(states_valid * m_ord, s_count);
        } else {
            for (long next = 0; next < s_count; ++next) {
                const int a = static_cast<int>(next % m_ord);
                if (forced && a != a_lo) continue;
                const long base = next / m_ord;
                double best = kInf;
                std::uint8_t best_t = 0;
                for (int t = 0; t < m_ord; ++t) {
                    const long sigma = base + static_cast<long>(t) * s_high;
                    const double pm = cur[static_cast<std::size_t>(sigma)];
                    if (pm == kInf) continue;
                    const double c = table[static_cast<std::size_t>(a + sigma * m_ord)];
                    const double d = vk - c;
                    const double cand = pm + d * d;
                    if (cand < best) {
                        best = cand;
                        best_t = static_cast<std::uint8_t>(t);
                    }
                }
                nxt[static_cast<std::size_t>(next)] = best;
                sv[static_cast<std::size_t>(next)] = best_t;
            }
        }
        cur.swap(nxt);

        if (step >= depth) {
            long best_state = 0;
            double best = kInf;
            for (long s = 0; s < s_count; ++s)
                if (cur[static_cast<std::size_t>(s)] < best) {
                    best = cur[static_cast<std::size_t>(s)];
                    best_state = s;
                }
            const long commit = k - depth;
            out[static_cast<std::size_t>(commit)] =
                pam_level(static_cast<int>(traceback_digit(best_state, k, commit)), m_ord);
        }
    }

    // flush the remaining window
    long best_state = 0;
    double best = kInf;
    for (long s = 0; s < s_count; ++s)
        if (cur[static_cast<std::size_t>(s)] < best) {
            best = cur[static_cast<std::size_t>(s)];
            best_state = s;
        }
    const long last = n_len - 1;
    const long first_pending = std::max(k0, n_len - depth);
    for (long n = first_pending; n <= last && n >= k0; ++n)
        out[static_cast<std::size_t>(n)] =
            pam_level(static_cast<int>(traceback_digit(best_state, last, n)), m_ord);

    return out;
}

struct AcmdDetectResult {
    std::vector<double> decisions;
    PostFilterTaps post_filter_taps;
    NoiseAutocorr autocorr;
};

// The stage-3 composition: noise estimate -> autocorrelation -> Yule-Walker
// -> post filter -> MLSE. A training prefix long enough for the lag count
// bootstraps the noise estimate from known symbols, keeping decision errors
// out of the autocorrelation; otherwise the estimate is decision-directed
// over the whole sequence.
inline AcmdDetectResult acmd_detect(const std::vector<double>& q, int memory,
                                    const std::vector<double>* known_prefix = nullptr,
                                    int modulation_order = 2, long state_budget = (1L << 16)) {
    AcmdDetectResult out;
    std::vector<double> z = estimate_noise(q, modulation_order, known_prefix);
    const std::size_t need = 100 * (static_cast<std::size_t>(memory) + 1);
    if (known_prefix && known_prefix->size() >= need && known_prefix->size() <= q.size())
        z.resize(known_prefix->size()); // prefix-only: decisions there are exact
    out.autocorr = autocorrelation(z, memory);
    out.post_filter_taps = yule_walker(out.autocorr);
    const std::vector<double> v = post_filter(q, out.post_filter_taps);
    const MlseDetector det(modulation_order, out.post_filter_taps, 0, state_budget);
    out.decisions = mlse_detect(v, det, known_prefix);
    return out;
}

} // namespace acmd
