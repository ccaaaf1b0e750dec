#pragma once

#include <condition_variable>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace spdekit {

/// Persistent worker pool for data-parallel maps over index ranges.
///
/// All users split work by fixed index ranges with disjoint writes, so
/// results are bit-identical for any worker count. Reductions stay serial.
/// Worker count comes from SPDEKIT_WORKERS, else hardware_concurrency.
class ThreadPool {
public:
    static ThreadPool& instance();

    int workers() const { return static_cast<int>(threads_.size()) + 1; }

    /// Runs fn(begin, end) over [0, n) split into contiguous blocks.
    /// Calls fn serially when n < grain (dispatch overhead not worth it).
    void for_range(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn,
                   std::size_t grain = 2048);

    ~ThreadPool();

private:
    explicit ThreadPool(int workers);

    struct Task {
        const std::function<void(std::size_t, std::size_t)>* fn = nullptr;
        std::size_t begin = 0, end = 0;
    };

    void worker_loop();

    std::vector<std::thread> threads_;
    std::mutex mu_;
    std::condition_variable cv_work_, cv_done_;
    std::vector<Task> tasks_;
    std::size_t next_task_ = 0;
    std::size_t pending_ = 0;
    bool stop_ = false;
};

inline void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn,
                         std::size_t grain = 2048) {
    ThreadPool::instance().for_range(n, fn, grain);
}

} // namespace spdekit
