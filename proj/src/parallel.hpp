#pragma once

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace smoothboost {

// Resolve a thread-count request: explicit value wins, then the
// SMOOTHBOOST_THREADS environment variable, then hardware concurrency.
// Always returns at least 1.
int resolve_threads(int requested);

// Persistent worker pool.  run(n, fn) invokes fn(0) ... fn(n-1), each unit
// exactly once, units handed out by an atomic counter.  The calling thread
// participates, so a pool of size 1 never spawns and runs everything inline.
//
// Determinism contract: results must be written into per-unit slots and
// reduced serially by the caller afterwards.  Scheduling order is then
// irrelevant, so output is bit-identical at every pool size.
class ThreadPool {
public:
    explicit ThreadPool(int threads);
    ~ThreadPool();

    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;

    int size() const { return static_cast<int>(workers_.size()) + 1; }

    void run(std::size_t n_units, const std::function<void(std::size_t)>& fn);

private:
    void worker_loop();
    void drain();

    std::vector<std::thread> workers_;
    std::mutex mutex_;
    std::condition_variable wake_;
    std::condition_variable done_;

    const std::function<void(std::size_t)>* fn_ = nullptr;
    std::size_t n_units_ = 0;
    std::atomic<std::size_t> next_{0};
    int busy_ = 0;
    std::uint64_t generation_ = 0;
    bool stopping_ = false;

    std::exception_ptr first_error_;
    std::mutex error_mutex_;
};

} // namespace smoothboost
