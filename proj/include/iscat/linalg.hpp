#pragma once

// Dense spectral-norm evaluation and a deterministic work-sharing helper.

#include <atomic>
#include <cmath>
#include <functional>
#include <random>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

namespace iscat {

/// Largest singular value. Dense SVD up to 512x512, power iteration on
/// A^H A above that (deterministic fixed-seed start vector).
inline double spectral_norm(const Eigen::MatrixXcd& a) {
    const Eigen::Index n = std::min(a.rows(), a.cols());
    if (n == 0) return 0.0;
    if (std::max(a.rows(), a.cols()) <= 512) {
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a);
        return svd.singularValues()[0];
    }
    std::mt19937_64 rng(0x5eed5eedULL);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXcd v(a.cols());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = {gauss(rng), gauss(rng)};
    v.normalize();
    double sigma = 0.0;
    int settled = 0;
    for (int it = 0; it < 200000; ++it) {
        Eigen::VectorXcd av = a * v;
        const double s = av.norm();
        if (s == 0.0) return 0.0;
        v = a.adjoint() * av;
        v /= v.norm();
        if (std::abs(s - sigma) <= 1e-10 * std::max(s, 1e-300)) {
            if (++settled >= 3) return s;
        } else {
            settled = 0;
        }
        sigma = s;
    }
    return sigma;
}

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Work is split
/// into fixed chunks whose boundaries do not depend on the thread count, and
/// every fn(i) writes only to its own slot, so results are bit-identical for
/// any thread count.
inline void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, count));
    if (threads == 1 || count <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int w = 0; w < threads; ++w)
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= count) return;
                fn(i);
            }
        });
    for (auto& t : pool) t.join();
}

} // namespace iscat
