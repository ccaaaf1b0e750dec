#include "spdekit/parallel.hpp"

#include <algorithm>
#include <cstring>
#include <string>

namespace spdekit {

namespace {

int configured_workers() {
    if (const char* env = std::getenv("SPDEKIT_WORKERS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

} // namespace

ThreadPool& ThreadPool::instance() {
    static ThreadPool pool(configured_workers());
    return pool;
}

ThreadPool::ThreadPool(int workers) {
    for (int i = 1; i < workers; ++i)
        threads_.emplace_back([this] { worker_loop(); });
}

ThreadPool::~ThreadPool() {
    {
        std::lock_guard<std::mutex> lk(mu_);
        stop_ = true;
    }
    cv_work_.notify_all();
    for (auto& t : threads_) t.join();
}

void ThreadPool::worker_loop() {
    for (;;) {
        Task task;
        {
            std::unique_lock<std::mutex> lk(mu_);
            cv_work_.wait(lk, [this] { return stop_ || next_task_ < tasks_.size(); });
            if (stop_ && next_task_ >= tasks_.size()) return;
            task = tasks_[next_task_++];
        }
        (*task.fn)(task.begin, task.end);
        {
            std::lock_guard<std::mutex> lk(mu_);
            if (--pending_ == 0) cv_done_.notify_all();
        }
    }
}

void ThreadPool::for_range(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn,
                           std::size_t grain) {
    if (n == 0) return;
    int w = workers();
    if (w == 1 || n < grain) {
        fn(0, n);
        return;
    }
    // 4 blocks per worker smooths load imbalance from nonuniform work.
    std::size_t blocks = std::min<std::size_t>(static_cast<std::size_t>(w) * 4,
                                               (n + grain / 2 - 1) / std::max<std::size_t>(1, grain / 2));
    blocks = std::max<std::size_t>(1, blocks);
    std::size_t chunk = (n + blocks - 1) / blocks;

    std::vector<Task> tasks;
    for (std::size_t b = 0; b * chunk < n; ++b) {
        Task t;
        t.fn = &fn;
        t.begin = b * chunk;
        t.end = std::min(n, t.begin + chunk);
        tasks.push_back(t);
    }
    {
        std::lock_guard<std::mutex> lk(mu_);
        tasks_ = std::move(tasks);
        next_task_ = 0;
        pending_ = tasks_.size();
    }
    cv_work_.notify_all();
    // The calling thread participates instead of idling.
    for (;;) {
        Task task;
        {
            std::unique_lock<std::mutex> lk(mu_);
            if (next_task_ >= tasks_.size()) break;
            task = tasks_[next_task_++];
        }
        (*task.fn)(task.begin, task.end);
        {
            std::lock_guard<std::mutex> lk(mu_);
            if (--pending_ == 0) cv_done_.notify_all();
        }
    }
    std::unique_lock<std::mutex> lk(mu_);
    cv_done_.wait(lk, [this] { return pending_ == 0; });
    tasks_.clear();
    next_task_ = 0;
}

} // namespace spdekit
