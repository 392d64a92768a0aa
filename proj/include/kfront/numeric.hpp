#pragma once
// Small numeric helpers shared across modules.

#include <cmath>
#include <cstdint>
#include <mutex>
#include <string>
#include <vector>

namespace kf {

// Neumaier compensated sum, fixed order.
struct CompensatedSum {
    double s = 0.0, c = 0.0;
    void add(double x) {
        double t = s + x;
        if (std::fabs(s) >= std::fabs(x))
            c += (s - t) + x;
        else
            c += (x - t) + s;
        s = t;
    }
    double value() const { return s + c; }
};

// FFTW's planner is not reentrant.
std::mutex& fftw_planner_mutex();

int good_fft_size(int n);

// Number of worker threads, from KFRNT_THREADS (default 1).
int worker_threads();

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 1469598103934665603ull);
std::uint64_t digest_doubles(const std::vector<double>& v, std::uint64_t h = 1469598103934665603ull);
std::string hex64(std::uint64_t h);

}  // namespace kf
