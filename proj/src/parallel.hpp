#ifndef GAMEHEDGE_PARALLEL_HPP
#define GAMEHEDGE_PARALLEL_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

namespace gamehedge::detail {

// Runs fn(begin, end) over contiguous blocks of [0, count). Each index is
// handled by exactly one call, so results written per index do not depend on
// the thread count.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
    threads = std::max<std::size_t>(1, std::min(threads, count));
    if (threads == 1) {
        fn(std::size_t{0}, count);
        return;
    }
    std::vector<std::thread> workers;
    std::exception_ptr error;
    std::mutex error_mutex;
    const std::size_t block = (count + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
        const std::size_t begin = t * block;
        const std::size_t end = std::min(count, begin + block);
        if (begin >= end) break;
        workers.emplace_back([&, begin, end] {
            try {
                fn(begin, end);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& w : workers) w.join();
    if (error) std::rethrow_exception(error);
}

// Neumaier summation in index order.
inline double compensated_sum(std::span<const double> values) {
    double sum = 0.0;
    double c = 0.0;
    for (double v : values) {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v)) {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    return sum + c;
}

struct MeanEstimate {
    double mean = 0.0;
    double standard_error = 0.0;
};

inline MeanEstimate mean_and_se(std::span<const double> values) {
    MeanEstimate out;
    const auto count = static_cast<double>(values.size());
    if (values.empty()) return out;
    out.mean = compensated_sum(values) / count;
    if (values.size() < 2) return out;
    std::vector<double> sq(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double d = values[i] - out.mean;
        sq[i] = d * d;
    }
    const double variance = compensated_sum(sq) / (count - 1.0);
    out.standard_error = std::sqrt(variance / count);
    return out;
}

}  // namespace gamehedge::detail

#endif  // GAMEHEDGE_PARALLEL_HPP
