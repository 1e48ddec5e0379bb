#include "delayou/parallel.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>

namespace delayou {

namespace {
int g_workers = 1;
}

int worker_count() { return g_workers; }

void set_worker_count(int k) {
    if (k < 1) throw std::invalid_argument("worker count must be >= 1");
    g_workers = k;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
    int k = g_workers;
    if (k <= 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(k) - 1);
    for (int t = 1; t < k; ++t) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
}

double pairwise_sum(const double* data, std::size_t len) {
    if (len == 0) return 0.0;
    if (len <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < len; ++i) s += data[i];
        return s;
    }
    std::size_t half = len / 2;
    return pairwise_sum(data, half) + pairwise_sum(data + half, len - half);
}

double pairwise_sum(const std::vector<double>& v) { return pairwise_sum(v.data(), v.size()); }

MeanSe mean_and_se(const std::vector<double>& samples) {
    MeanSe r;
    r.count = samples.size();
    if (r.count == 0) return r;
    r.mean = pairwise_sum(samples) / double(r.count);
    if (r.count < 2) return r;
    std::vector<double> sq(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        double d = samples[i] - r.mean;
        sq[i] = d * d;
    }
    double var = pairwise_sum(sq) / double(r.count - 1);
    r.se = std::sqrt(var / double(r.count));
    return r;
}

} // namespace delayou
