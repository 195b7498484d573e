#include "parallel.hpp"

#include <cstdlib>
#include <string>

namespace smoothboost {

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("SMOOTHBOOST_THREADS")) {
        try {
            int n = std::stoi(env);
            if (n > 0) return n;
        } catch (...) {
            // unparseable value: fall through to autodetect
        }
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

ThreadPool::ThreadPool(int threads) {
    int extra = threads > 1 ? threads - 1 : 0;
    workers_.reserve(static_cast<std::size_t>(extra));
    for (int i = 0; i < extra; ++i) {
        workers_.emplace_back([this] { worker_loop(); });
    }
}

ThreadPool::~ThreadPool() {
    {
        std::lock_guard lock(mutex_);
        stopping_ = true;
    }
    wake_.notify_all();
    for (auto& w : workers_) w.join();
}

void ThreadPool::drain() {
    // acq pairs with the release reset in run(): a worker that observes the
    // fresh counter also observes the fn_/n_units_ stores that preceded it.
    std::size_t i;
    while ((i = next_.fetch_add(1, std::memory_order_acq_rel)) < n_units_) {
        try {
            (*fn_)(i);
        } catch (...) {
            std::lock_guard lock(error_mutex_);
            if (!first_error_) first_error_ = std::current_exception();
        }
    }
}

void ThreadPool::worker_loop() {
    std::uint64_t seen = 0;
    for (;;) {
        {
            std::unique_lock lock(mutex_);
            wake_.wait(lock, [&] { return stopping_ || generation_ != seen; });
            if (stopping_) return;
            seen = generation_;
            ++busy_;
        }
        drain();
        {
            std::lock_guard lock(mutex_);
            --busy_;
        }
        done_.notify_one();
    }
}

void ThreadPool::run(std::size_t n_units, const std::function<void(std::size_t)>& fn) {
    if (n_units == 0) return;
    if (workers_.empty()) {
        // Inline fast path: no synchronization, exceptions propagate as-is.
        for (std::size_t i = 0; i < n_units; ++i) fn(i);
        return;
    }
    {
        std::lock_guard lock(mutex_);
        fn_ = &fn;
        n_units_ = n_units;
        first_error_ = nullptr;
        next_.store(0, std::memory_order_release);
        ++generation_;
    }
    wake_.notify_all();
    drain();
    {
        std::unique_lock lock(mutex_);
        done_.wait(lock, [&] { return busy_ == 0; });
        fn_ = nullptr;
    }
    if (first_error_) std::rethrow_exception(first_error_);
}

} // namespace smoothboost
