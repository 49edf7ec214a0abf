#pragma once

// Test-only reference implementations. These are deliberately literal and
// slow; none of them call into the library code paths they check.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;

inline std::vector<cplx> naive_dft(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<cplx> twiddle(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = -2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
        twiddle[i] = {std::cos(a), std::sin(a)};
    }
    std::vector<cplx> out(n);
    for (std::size_t m = 0; m < n; ++m) {
        cplx acc{0.0, 0.0};
        for (std::size_t t = 0; t < n; ++t) acc += x[t] * twiddle[(m * t) % n];
        out[m] = acc;
    }
    return out;
}

/// Full inverse; returns the complex time signal.
inline std::vector<cplx> naive_idft(const std::vector<cplx>& bins) {
    const std::size_t n = bins.size();
    std::vector<cplx> twiddle(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
        twiddle[i] = {std::cos(a), std::sin(a)};
    }
    std::vector<cplx> out(n);
    for (std::size_t t = 0; t < n; ++t) {
        cplx acc{0.0, 0.0};
        for (std::size_t m = 0; m < n; ++m) acc += bins[m] * twiddle[(m * t) % n];
        out[t] = acc / static_cast<double>(n);
    }
    return out;
}

inline double correlation(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

struct NaiveVmdResult {
    std::vector<std::vector<double>> modes;
    std::vector<double> omegas;
};

/// Literal transcription of the ADMM loop: explicit Gauss-Seidel sums,
/// O(L^2) transforms, a fixed number of sweeps, uniform omega start.
inline NaiveVmdResult naive_vmd(const std::vector<double>& f, int K, double alpha, double tau,
                                int sweeps) {
    const std::size_t L = f.size();
    // mirror: reversed first half on the left, reversed second half on the right
    std::vector<double> ext;
    const std::size_t h = L / 2;
    for (std::size_t i = 0; i < h; ++i) ext.push_back(f[h - 1 - i]);
    for (double v : f) ext.push_back(v);
    for (std::size_t i = 0; i < L - h; ++i) ext.push_back(f[L - 1 - i]);
    const std::size_t T = ext.size();

    const std::vector<cplx> full = naive_dft(ext);
    const std::size_t bins = T / 2 + 1;
    std::vector<cplx> fh(full.begin(), full.begin() + static_cast<long>(bins));
    std::vector<double> w(bins);
    for (std::size_t m = 0; m < bins; ++m) w[m] = static_cast<double>(m) / static_cast<double>(T);

    std::vector<double> omega(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) omega[static_cast<std::size_t>(k)] = 0.5 * k / K;
    std::vector<std::vector<cplx>> u_old(static_cast<std::size_t>(K), std::vector<cplx>(bins));
    std::vector<cplx> lambda(bins);

    for (int n = 0; n < sweeps; ++n) {
        std::vector<std::vector<cplx>> u_new = u_old;
        for (int k = 0; k < K; ++k) {
            const auto kk = static_cast<std::size_t>(k);
            for (std::size_t m = 0; m < bins; ++m) {
                cplx num = fh[m];
                for (int i = 0; i < k; ++i) num -= u_new[static_cast<std::size_t>(i)][m];
                for (int i = k + 1; i < K; ++i) num -= u_old[static_cast<std::size_t>(i)][m];
                num += lambda[m] / 2.0;
                u_new[kk][m] = num / (1.0 + 2.0 * alpha * (w[m] - omega[kk]) * (w[m] - omega[kk]));
            }
            double a = 0, b = 0;
            for (std::size_t m = 0; m < bins; ++m) {
                a += w[m] * std::norm(u_new[kk][m]);
                b += std::norm(u_new[kk][m]);
            }
            if (b >= 1e-30) omega[kk] = a / b;
        }
        for (std::size_t m = 0; m < bins; ++m) {
            cplx s{0, 0};
            for (int k = 0; k < K; ++k) s += u_new[static_cast<std::size_t>(k)][m];
            lambda[m] = lambda[m] + tau * (fh[m] - s);
        }
        u_old = u_new;
    }

    std::vector<std::size_t> order(static_cast<std::size_t>(K));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return omega[a] < omega[b]; });

    NaiveVmdResult res;
    for (std::size_t k : order) {
        std::vector<cplx> spec(T);
        for (std::size_t m = 0; m < bins; ++m) spec[m] = u_old[k][m];
        for (std::size_t m = bins; m < T; ++m) spec[m] = std::conj(u_old[k][T - m]);
        const std::vector<cplx> time = naive_idft(spec);
        std::vector<double> mode(L);
        for (std::size_t t = 0; t < L; ++t) mode[t] = time[h + t].real();
        res.modes.push_back(mode);
        res.omegas.push_back(omega[k]);
    }
    return res;
}

inline std::vector<double> random_signal(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> x(n);
    for (auto& v : x) v = g(rng);
    return x;
}

}  // namespace oracle
