#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace delayou {

// Global worker count for Monte Carlo fan-out. Results must not depend on it:
// every path draws from its own counter-based stream and reductions are
// pairwise over the path-indexed buffer.
int worker_count();
void set_worker_count(int k);

// Runs fn(i) for i in [0, count) across workers. fn must only write to
// slots owned by its index.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

// Order-independent pairwise sum.
double pairwise_sum(const double* data, std::size_t len);
double pairwise_sum(const std::vector<double>& v);

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
    std::size_t count = 0;
};

MeanSe mean_and_se(const std::vector<double>& samples);

} // namespace delayou
