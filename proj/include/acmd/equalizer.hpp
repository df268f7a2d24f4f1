#pragma once

// Stage 1-2 of the adaptive channel-matched receiver: the polynomial
// nonlinear equalizer (memory polynomial, diagonal kernels) trained with
// Adam, the full triangular 3rd-order Volterra forward used as its oracle
// and small-scale sibling, and the AR-MA decision-feedback equalizer trained
// with LMS / decision-directed LMS.
//
// All feedforward windows are centered: order-i taps act on
// r[n + c_i - k], c_i = (K_i - 1)/2 (the linear part uses its configurable
// reference tap). A single-tap filter of [1] is therefore exactly the
// identity, and the degeneracy chain VNLE(diag) == PNLE, PNLE(h2=h3={}) ==
// FFE, FFE([1]) == id holds bit-for-bit.

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "acmd/errors.hpp"
#include "acmd/signal.hpp"

namespace acmd {

// Boundary handling for feedforward windows. Frames are one period of a
// repeating pattern in this simulator, so the pipeline uses wrap; the zero
// default matches ordinary linear filtering.
enum class Edge { zero, wrap };

namespace detail {

inline double at(const std::vector<double>& x, long idx, Edge edge) {
    const long n = static_cast<long>(x.size());
    if (edge == Edge::wrap) {
        idx %= n;
        if (idx < 0) idx += n;
        return x[static_cast<std::size_t>(idx)];
    }
    if (idx < 0 || idx >= n) return 0.0;
    return x[static_cast<std::size_t>(idx)];
}

inline void require_finite(const std::vector<double>& taps, const char* what) {
    for (double v : taps)
        if (!std::isfinite(v)) throw StateError(std::string(what) + " taps are not finite");
}

} // namespace detail

struct FfeTaps {
    std::vector<double> h;
};

// Diagonal-kernel 3rd-order polynomial equalizer taps.
struct PnleTaps {
    std::vector<double> h1, h2, h3;
    int reference_tap{0};

    void validate() const {
        if (h1.empty()) throw ParameterError("pnle needs at least one linear tap");
        if (h1.size() < h2.size() || h1.size() < h3.size())
            throw ParameterError("pnle requires K1 >= K2 and K1 >= K3");
        if (reference_tap < 0 || reference_tap >= static_cast<int>(h1.size()))
            throw ParameterError("pnle reference tap out of range");
        detail::require_finite(h1, "pnle h1");
        detail::require_finite(h2, "pnle h2");
        detail::require_finite(h3, "pnle h3");
    }
};

// Center-spike initialization; K1 odd keeps the reference centered.
inline PnleTaps make_pnle_taps(int k1, int k2, int k3) {
    if (k1 < 1 || k2 < 0 || k3 < 0 || k1 < k2 || k1 < k3)
        throw ParameterError("invalid pnle tap numbers");
    PnleTaps t;
    t.h1.assign(static_cast<std::size_t>(k1), 0.0);
    t.h2.assign(static_cast<std::size_t>(k2), 0.0);
    t.h3.assign(static_cast<std::size_t>(k3), 0.0);
    t.reference_tap = (k1 - 1) / 2;
    t.h1[static_cast<std::size_t>(t.reference_tap)] = 1.0;
    return t;
}

// Full triangular 3rd-order Volterra taps, kernels stored flattened.
struct VnleTaps {
    int k1{0}, k2{0}, k3{0};
    std::vector<double> h1;
    std::vector<double> h2; // (k,l), l <= k
    std::vector<double> h3; // (k,l,m), m <= l <= k

    static std::size_t tri_size(int k) { return static_cast<std::size_t>(k) * (k + 1) / 2; }
    static std::size_t tet_size(int k) {
        return static_cast<std::size_t>(k) * (k + 1) * (k + 2) / 6;
    }

    static VnleTaps zeros(int k1, int k2, int k3) {
        if (k1 < 1 || k2 < 0 || k3 < 0 || k1 < k2 || k1 < k3)
            throw ParameterError("vnle requires K1 >= K2 and K1 >= K3");
        VnleTaps t;
        t.k1 = k1;
        t.k2 = k2;
        t.k3 = k3;
        t.h1.assign(static_cast<std::size_t>(k1), 0.0);
        t.h2.assign(tri_size(k2), 0.0);
        t.h3.assign(tet_size(k3), 0.0);
        return t;
    }

    double& h2_at(int k, int l) { return h2[tri_size(k) + static_cast<std::size_t>(l)]; }
    double h2_at(int k, int l) const { return h2[tri_size(k) + static_cast<std::size_t>(l)]; }
    double& h3_at(int k, int l, int m) {
        return h3[tet_size(k) + tri_size(l) + static_cast<std::size_t>(m)];
    }
    double h3_at(int k, int l, int m) const {
        return h3[tet_size(k) + tri_size(l) + static_cast<std::size_t>(m)];
    }
};

struct DfeTaps {
    std::vector<double> f1; // MA, feedforward over the equalizer output
    std::vector<double> f2; // AR, feedback over decided symbols

    void validate() const {
        if (f1.empty()) throw ParameterError("dfe needs at least one feedforward tap");
        detail::require_finite(f1, "dfe f1");
        detail::require_finite(f2, "dfe f2");
    }
};

inline DfeTaps make_dfe_taps(int f1, int f2) {
    if (f1 < 1 || f2 < 0) throw ParameterError("invalid dfe tap numbers");
    DfeTaps t;
    t.f1.assign(static_cast<std::size_t>(f1), 0.0);
    t.f2.assign(static_cast<std::size_t>(f2), 0.0);
    t.f1[static_cast<std::size_t>((f1 - 1) / 2)] = 1.0;
    return t;
}

inline std::vector<double> ffe_forward(const std::vector<double>& r, const FfeTaps& taps,
                                       Edge edge = Edge::zero) {
    if (taps.h.empty()) throw ParameterError("ffe needs at least one tap");
    detail::require_finite(taps.h, "ffe");
    const long c = (static_cast<long>(taps.h.size()) - 1) / 2;
    std::vector<double> p(r.size(), 0.0);
    for (long n = 0; n < static_cast<long>(r.size()); ++n) {
        double acc = 0.0;
        for (long k = 0; k < static_cast<long>(taps.h.size()); ++k)
            acc += taps.h[static_cast<std::size_t>(k)] * detail::at(r, n + c - k, edge);
        p[static_cast<std::size_t>(n)] = acc;
    }
    return p;
}

inline std::vector<double> pnle_forward(const std::vector<double>& r, const PnleTaps& taps,
                                        Edge edge = Edge::zero) {
    taps.validate();
    if (r.size() < taps.h1.size()) throw ParameterError("input shorter than the pnle span");
    const long n_len = static_cast<long>(r.size());
    const long c1 = taps.reference_tap;
    const long c2 = (static_cast<long>(taps.h2.size()) - 1) / 2;
    const long c3 = (static_cast<long>(taps.h3.size()) - 1) / 2;
    std::vector<double> p(r.size(), 0.0);
    for (long n = 0; n < n_len; ++n) {
        double acc = 0.0;
        for (long k = 0; k < static_cast<long>(taps.h1.size()); ++k)
            acc += taps.h1[static_cast<std::size_t>(k)] * detail::at(r, n + c1 - k, edge);
        for (long k = 0; k < static_cast<long>(taps.h2.size()); ++k) {
            const double x = detail::at(r, n + c2 - k, edge);
            acc += taps.h2[static_cast<std::size_t>(k)] * x * x;
        }
        for (long k = 0; k < static_cast<long>(taps.h3.size()); ++k) {
            const double x = detail::at(r, n + c3 - k, edge);
            acc += taps.h3[static_cast<std::size_t>(k)] * x * x * x;
        }
        p[static_cast<std::size_t>(n)] = acc;
    }
    return p;
}

inline std::vector<double> vnle_forward(const std::vector<double>& r, const VnleTaps& taps,
                                        Edge edge = Edge::zero) {
    if (taps.k1 < 1 || taps.k1 < taps.k2 || taps.k1 < taps.k3)
        throw ParameterError("vnle requires K1 >= K2 and K1 >= K3");
    if (r.size() < static_cast<std::size_t>(taps.k1))
        throw ParameterError("input shorter than the vnle span");
    detail::require_finite(taps.h1, "vnle h1");
    detail::require_finite(taps.h2, "vnle h2");
    detail::require_finite(taps.h3, "vnle h3");
    const long c1 = (taps.k1 - 1) / 2;
    const long c2 = (taps.k2 - 1) / 2;
    const long c3 = (taps.k3 - 1) / 2;
    std::vector<double> p(r.size(), 0.0);
    for (long n = 0; n < static_cast<long>(r.size()); ++n) {
        double acc = 0.0;
        for (int k = 0; k < taps.k1; ++k)
            acc += taps.h1[static_cast<std::size_t>(k)] * detail::at(r, n + c1 - k, edge);
        for (int k = 0; k < taps.k2; ++k) {
            const double xk = detail::at(r, n + c2 - k, edge);
            for (int l = 0; l <= k; ++l)
                acc += taps.h2_at(k, l) * xk * detail::at(r, n + c2 - l, edge);
        }
        for (int k = 0; k < taps.k3; ++k) {
            const double xk = detail::at(r, n + c3 - k, edge);
            for (int l = 0; l <= k; ++l) {
                const double xl = detail::at(r, n + c3 - l, edge);
                for (int m = 0; m <= l; ++m)
                    acc += taps.h3_at(k, l, m) * xk * xl * detail::at(r, n + c3 - m, edge);
            }
        }
        p[static_cast<std::size_t>(n)] = acc;
    }
    return p;
}

// Adam optimizer state; separate step sizes per polynomial order because the
// higher-order terms want much smaller steps. decay_steps > 0 enables a
// 1/(1 + t/decay_steps) step-size schedule so the late-training noise ball
// shrinks instead of lingering.
struct AdamState {
    std::array<double, 3> alpha{1e-3, 1e-4, 1e-5};
    double beta1{0.9};
    double beta2{0.999};
    double eps{1e-8};
    long decay_steps{0};
    long step{0};
    std::vector<double> m1, v1, m2, v2, m3, v3;

    void validate() const {
        if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
            throw ParameterError("adam decay rates must lie in [0, 1)");
        if (eps <= 0.0) throw ParameterError("adam eps must be positive");
    }

    void size_for(const PnleTaps& t) {
        m1.assign(t.h1.size(), 0.0);
        v1.assign(t.h1.size(), 0.0);
        m2.assign(t.h2.size(), 0.0);
        v2.assign(t.h2.size(), 0.0);
        m3.assign(t.h3.size(), 0.0);
        v3.assign(t.h3.size(), 0.0);
        step = 0;
    }
};

struct LmsState {
    enum class Mode { training, decision_directed };
    double mu{1e-3};
    Mode mode{Mode::training};

    void validate() const {
        if (mu < 0.0) throw ParameterError("lms step must be non-negative");
    }
};

struct PnleTrainResult {
    PnleTaps taps;
    std::vector<double> mse_trace; // one entry per mini-batch step
};

// Mini-batch Adam minimizing the MSE between the equalizer output and the
// known training symbols. Throws TrainingFailure when the batch MSE blows
// past 10x its initial value.
inline PnleTrainResult train_pnle(const std::vector<double>& r, const SymbolFrame& target,
                                  PnleTaps taps, AdamState adam, int epochs, int batch = 500,
                                  Edge edge = Edge::zero) {
    taps.validate();
    adam.validate();
    if (target.training_len < 1000)
        throw ParameterError("pnle training needs at least 1000 training symbols");
    if (target.symbols.size() > r.size())
        throw ParameterError("received sequence shorter than the target frame");
    if (epochs < 1 || batch < 1) throw ParameterError("epochs and batch must be >= 1");
    adam.size_for(taps);

    const long train_len = static_cast<long>(target.training_len);
    const long c1 = taps.reference_tap;
    const long c2 = (static_cast<long>(taps.h2.size()) - 1) / 2;
    const long c3 = (static_cast<long>(taps.h3.size()) - 1) / 2;
    const long k1 = static_cast<long>(taps.h1.size());
    const long k2 = static_cast<long>(taps.h2.size());
    const long k3 = static_cast<long>(taps.h3.size());

    std::vector<double> r2(r.size()), r3(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
        r2[i] = r[i] * r[i];
        r3[i] = r2[i] * r[i];
    }

    PnleTrainResult result;
    std::vector<double> g1(taps.h1.size()), g2(taps.h2.size()), g3(taps.h3.size());
    double initial_mse = -1.0;

    auto adam_update = [&adam](std::vector<double>& h, const std::vector<double>& g,
                               std::vector<double>& m, std::vector<double>& v, double alpha) {
        if (adam.decay_steps > 0)
            alpha /= 1.0 + static_cast<double>(adam.step) / static_cast<double>(adam.decay_steps);
        const double b1c = 1.0 - std::pow(adam.beta1, static_cast<double>(adam.step));
        const double b2c = 1.0 - std::pow(adam.beta2, static_cast<double>(adam.step));
        for (std::size_t i = 0; i < h.size(); ++i) {
            m[i] = adam.beta1 * m[i] + (1.0 - adam.beta1) * g[i];
            v[i] = adam.beta2 * v[i] + (1.0 - adam.beta2) * g[i] * g[i];
            const double mh = m[i] / b1c;
            const double vh = v[i] / b2c;
            h[i] -= alpha * mh / (std::sqrt(vh) + adam.eps);
        }
    };

    for (int epoch = 0; epoch < epochs; ++epoch) {
        for (long start = 0; start < train_len; start += batch) {
            const long stop = std::min(start + batch, train_len);
            const double bsz = static_cast<double>(stop - start);
            std::fill(g1.begin(), g1.end(), 0.0);
            std::fill(g2.begin(), g2.end(), 0.0);
            std::fill(g3.begin(), g3.end(), 0.0);
            double mse = 0.0;
            for (long n = start; n < stop; ++n) {
                double p = 0.0;
                for (long k = 0; k < k1; ++k)
                    p += taps.h1[static_cast<std::size_t>(k)] * detail::at(r, n + c1 - k, edge);
                for (long k = 0; k < k2; ++k)
                    p += taps.h2[static_cast<std::size_t>(k)] * detail::at(r2, n + c2 - k, edge);
                for (long k = 0; k < k3; ++k)
                    p += taps.h3[static_cast<std::size_t>(k)] * detail::at(r3, n + c3 - k, edge);
                const double e = p - target.symbols[static_cast<std::size_t>(n)];
                mse += e * e;
                const double w = 2.0 * e / bsz;
                for (long k = 0; k < k1; ++k)
                    g1[static_cast<std::size_t>(k)] += w * detail::at(r, n + c1 - k, edge);
                for (long k = 0; k < k2; ++k)
                    g2[static_cast<std::size_t>(k)] += w * detail::at(r2, n + c2 - k, edge);
                for (long k = 0; k < k3; ++k)
                    g3[static_cast<std::size_t>(k)] += w * detail::at(r3, n + c3 - k, edge);
            }
            mse /= bsz;
            result.mse_trace.push_back(mse);
            if (initial_mse < 0.0) initial_mse = mse;
            if (initial_mse > 0.0 && mse > 10.0 * initial_mse)
                throw TrainingFailure("pnle training diverged (mse > 10x initial)");

            adam.step += 1;
            adam_update(taps.h1, g1, adam.m1, adam.v1, adam.alpha[0]);
            adam_update(taps.h2, g2, adam.m2, adam.v2, adam.alpha[1]);
            adam_update(taps.h3, g3, adam.m3, adam.v3, adam.alpha[2]);
        }
    }
    result.taps = std::move(taps);
    return result;
}

struct DfeRunResult {
    std::vector<double> q;
    std::vector<double> decisions;
    DfeTaps taps;
};

// AR-MA decision feedback equalizer, one sequential pass. In training mode
// the known symbols drive both the error and the feedback history over the
// training prefix; afterwards (and in decision-directed mode) the slicer
// output does. Feedback through decisions keeps the recursion bounded.
inline DfeRunResult dfe_run(const std::vector<double>& p, DfeTaps taps, const LmsState& lms,
                            const SymbolFrame* target = nullptr, Edge edge = Edge::zero,
                            int modulation_order = 2) {
    taps.validate();
    lms.validate();
    if (lms.mode == LmsState::Mode::training && target == nullptr)
        throw ParameterError("training mode requires a target frame");
    const long n_len = static_cast<long>(p.size());
    const long f1 = static_cast<long>(taps.f1.size());
    const long f2 = static_cast<long>(taps.f2.size());
    const long cf = (f1 - 1) / 2;
    const long train_len =
        (lms.mode == LmsState::Mode::training && target != nullptr)
            ? static_cast<long>(target->training_len)
            : 0;

    DfeRunResult out;
    out.q.resize(p.size());
    out.decisions.resize(p.size());
    std::vector<double> hist(p.size(), 0.0); // feedback history (decided or known)

    for (long n = 0; n < n_len; ++n) {
        double y = 0.0;
        for (long k = 0; k < f1; ++k)
            y += taps.f1[static_cast<std::size_t>(k)] * detail::at(p, n + cf - k, edge);
        for (long l = 0; l < f2; ++l) {
            const long idx = n - 1 - l;
            if (idx >= 0) y += taps.f2[static_cast<std::size_t>(l)] * hist[static_cast<std::size_t>(idx)];
        }
        const double sliced = nearest_symbol(y, modulation_order);
        const bool known = n < train_len;
        const double d = known ? target->symbols[static_cast<std::size_t>(n)] : sliced;
        const double e = d - y;
        if (lms.mu > 0.0) {
            for (long k = 0; k < f1; ++k)
                taps.f1[static_cast<std::size_t>(k)] += lms.mu * e * detail::at(p, n + cf - k, edge);
            for (long l = 0; l < f2; ++l) {
                const long idx = n - 1 - l;
                if (idx >= 0)
                    taps.f2[static_cast<std::size_t>(l)] +=
                        lms.mu * e * hist[static_cast<std::size_t>(idx)];
            }
        }
        out.q[static_cast<std::size_t>(n)] = y;
        out.decisions[static_cast<std::size_t>(n)] = sliced;
        hist[static_cast<std::size_t>(n)] = d;
    }
    out.taps = std::move(taps);
    return out;
}

struct EqFreqResponse {
    std::vector<double> omega;      // [0, pi)
    std::vector<cplx> pnle;         // linearized 1st-order response
    std::vector<cplx> combined;     // H_h1 * H_f1 / (1 - H_f2 * e^{-jw})
    bool pole_warning{false};
};

// Linearized response of the trained chain: the decision device is replaced
// by identity so the AR part becomes a plain IIR denominator, and only the
// 1st-order PNLE taps enter.
inline EqFreqResponse equalizer_frequency_response(const PnleTaps& pnle, const DfeTaps& dfe,
                                                   int grid) {
    if (grid < 256) throw ParameterError("frequency grid must have at least 256 points");
    pnle.validate();
    dfe.validate();
    EqFreqResponse out;
    out.omega.resize(static_cast<std::size_t>(grid));
    out.pnle.resize(static_cast<std::size_t>(grid));
    out.combined.resize(static_cast<std::size_t>(grid));
    const long c1 = pnle.reference_tap;
    const long cf = (static_cast<long>(dfe.f1.size()) - 1) / 2;
    for (int i = 0; i < grid; ++i) {
        const double w = M_PI * static_cast<double>(i) / static_cast<double>(grid);
        cplx hh{0.0, 0.0}, hf{0.0, 0.0}, hb{0.0, 0.0};
        for (std::size_t k = 0; k < pnle.h1.size(); ++k)
            hh += pnle.h1[k] * std::polar(1.0, -w * (static_cast<double>(k) - static_cast<double>(c1)));
        for (std::size_t k = 0; k < dfe.f1.size(); ++k)
            hf += dfe.f1[k] * std::polar(1.0, -w * (static_cast<double>(k) - static_cast<double>(cf)));
        for (std::size_t l = 0; l < dfe.f2.size(); ++l)
            hb += dfe.f2[l] * std::polar(1.0, -w * static_cast<double>(l + 1));
        const cplx den = 1.0 - hb;
        if (std::abs(den) < 1e-6) out.pole_warning = true;
        out.omega[static_cast<std::size_t>(i)] = w;
        out.pnle[static_cast<std::size_t>(i)] = hh;
        out.combined[static_cast<std::size_t>(i)] = hh * hf / den;
    }
    return out;
}

} // namespace acmd
