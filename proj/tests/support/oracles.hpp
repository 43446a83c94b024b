#pragma once

// Reference implementations written independently of the library: they work
// on plain integers and value ranges instead of bit matrices, and search
// exhaustively where the library computes in closed form.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

namespace oracle {

inline int bit(int value, int b) { return (static_cast<unsigned>(value) >> b) & 1u; }

/// Largest r <= 3 such that every value fits in 8 - r two's complement bits.
inline int redundant(std::span<const std::int8_t> values) {
    int r = 0;
    while (r < 3) {
        const int lo = -(1 << (6 - r));
        const int hi = (1 << (6 - r)) - 1;
        const bool fits = std::all_of(values.begin(), values.end(), [&](int v) { return v >= lo && v <= hi; });
        if (!fits) break;
        ++r;
    }
    return r;
}

inline std::int64_t sse(std::span<const std::int8_t> a, std::span<const int> b) {
    std::int64_t s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::int64_t{a[i] - b[i]} * (a[i] - b[i]);
    return s;
}

/// Rounded averaging with the constant searched over all 2^k values.
struct AvgSearch {
    std::int64_t best_sse = std::numeric_limits<std::int64_t>::max();
    std::vector<int> best_constants;  ///< every constant that attains best_sse
};

inline AvgSearch rounded_avg_search(std::span<const std::int8_t> values, int n) {
    const int r = std::min(redundant(values), n);
    const int k = n - r;
    AvgSearch out;
    for (int c = 0; c < (1 << k); ++c) {
        std::vector<int> approx;
        for (int v : values) approx.push_back(v - (v & ((1 << k) - 1)) + c);
        const auto s = sse(values, approx);
        if (s < out.best_sse) {
            out.best_sse = s;
            out.best_constants = {c};
        } else if (s == out.best_sse) {
            out.best_constants.push_back(c);
        }
    }
    return out;
}

/// Nearest allowed multiple of 2^k by enumerating every candidate in the
/// (8 - r)-bit range whose reconstruction stays in int8. Ties take the lower.
inline int snap(int shifted, int k, int r, int c) {
    const int step = 1 << k;
    int best = 0;
    int best_dist = std::numeric_limits<int>::max();
    for (int m = -(1 << (7 - r)); m <= (1 << (7 - r)) - step; m += step) {
        if (m - c < -128 || m - c > 127) continue;
        const int d = std::abs(shifted - m);
        if (d < best_dist) {
            best_dist = d;
            best = m;
        }
    }
    return best;
}

inline std::vector<int> zero_point_at(std::span<const std::int8_t> values, int n, int c) {
    std::vector<std::int8_t> shifted;
    for (int v : values) shifted.push_back(static_cast<std::int8_t>(std::clamp(v + c, -128, 127)));
    const int r = std::min(redundant(shifted), n);
    const int k = n - r;
    std::vector<int> approx;
    for (int s : shifted) approx.push_back(snap(s, k, r, c) - c);
    return approx;
}

struct ZpSearch {
    std::int64_t best_sse = std::numeric_limits<std::int64_t>::max();
    int first_best = 0;
};

inline ZpSearch zero_point_search(std::span<const std::int8_t> values, int n) {
    ZpSearch out;
    for (int c = -32; c <= 31; ++c) {
        const auto s = sse(values, zero_point_at(values, n, c));
        if (s < out.best_sse) {
            out.best_sse = s;
            out.first_best = c;
        }
    }
    return out;
}

inline std::int64_t dot(std::span<const std::int8_t> w, std::span<const std::int8_t> a) {
    std::int64_t s = 0;
    for (std::size_t i = 0; i < w.size(); ++i) s += std::int64_t{w[i]} * a[i];
    return s;
}

inline std::vector<std::int8_t> random_bytes(std::mt19937_64& rng, std::size_t n) {
    std::uniform_int_distribution<int> d(-128, 127);
    std::vector<std::int8_t> v(n);
    for (auto& x : v) x = static_cast<std::int8_t>(d(rng));
    return v;
}

inline std::vector<std::int8_t> gaussian_bytes(std::mt19937_64& rng, std::size_t n, double sigma) {
    std::normal_distribution<double> d(0.0, sigma);
    std::vector<std::int8_t> v(n);
    for (auto& x : v) x = static_cast<std::int8_t>(std::clamp<long>(std::lround(d(rng)), -128, 127));
    return v;
}

/// Mixes uniform, narrow Gaussian and edge-heavy groups so redundant-column
/// counts, clipping and overflow paths all get exercised.
inline std::vector<std::int8_t> varied_group(std::mt19937_64& rng, std::size_t n) {
    switch (rng() % 4) {
        case 0: return random_bytes(rng, n);
        case 1: return gaussian_bytes(rng, n, 3.0 + static_cast<double>(rng() % 40));
        case 2: {
            auto v = random_bytes(rng, n);
            for (auto& x : v) x = static_cast<std::int8_t>(rng() % 2 ? 127 - (rng() % 4) : -128 + (rng() % 4));
            return v;
        }
        default: {
            const int center = static_cast<int>(rng() % 256) - 128;
            std::vector<std::int8_t> v(n);
            for (auto& x : v) x = static_cast<std::int8_t>(std::clamp(center + static_cast<int>(rng() % 9) - 4, -128, 127));
            return v;
        }
    }
}

}  // namespace oracle
