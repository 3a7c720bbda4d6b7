#pragma once

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace vitstr {

// Worker count for data-parallel loops. Capped by the VITSTR_THREADS
// environment variable; defaults to hardware concurrency (at most 8).
inline size_t worker_threads() {
    static const size_t n = [] {
        if (const char* env = std::getenv("VITSTR_THREADS")) {
            long v = std::strtol(env, nullptr, 10);
            if (v >= 1) return static_cast<size_t>(std::min<long>(v, 64));
        }
        size_t hw = std::thread::hardware_concurrency();
        return std::clamp<size_t>(hw, size_t{1}, size_t{8});
    }();
    return n;
}

namespace detail {

// Persistent pool; one blocking range-job at a time. Results of any
// parallel_for are independent of the thread count because chunks never
// share output elements.
class ThreadPool {
public:
    static ThreadPool& instance() {
        static ThreadPool pool(worker_threads());
        return pool;
    }

    void parallel_for(size_t n, const std::function<void(size_t, size_t)>& body) {
        if (n == 0) return;
        if (workers_.empty() || n == 1) {
            body(0, n);
            return;
        }
        std::lock_guard<std::mutex> job_lock(job_mutex_);
        size_t parts = std::min(n, workers_.size() + 1);
        chunk_ = (n + 4 * parts - 1) / (4 * parts);
        if (chunk_ == 0) chunk_ = 1;
        body_ = &body;
        limit_ = n;
        next_.store(0, std::memory_order_relaxed);
        pending_.store(parts, std::memory_order_relaxed);
        {
            std::lock_guard<std::mutex> lk(mutex_);
            generation_++;
            starters_ = parts - 1;
        }
        cv_.notify_all();
        work_chunks();
        std::unique_lock<std::mutex> lk(mutex_);
        done_cv_.wait(lk, [&] { return pending_.load(std::memory_order_acquire) == 0; });
        body_ = nullptr;
    }

    ~ThreadPool() {
        {
            std::lock_guard<std::mutex> lk(mutex_);
            stop_ = true;
            generation_++;
        }
        cv_.notify_all();
        for (auto& t : workers_) t.join();
    }

private:
    explicit ThreadPool(size_t threads) {
        for (size_t i = 0; i + 1 < threads; ++i) {
            workers_.emplace_back([this] { worker_main(); });
        }
    }

    void worker_main() {
        uint64_t seen = 0;
        for (;;) {
            {
                std::unique_lock<std::mutex> lk(mutex_);
                cv_.wait(lk, [&] { return stop_ || (generation_ != seen && starters_ > 0); });
                if (stop_) return;
                seen = generation_;
                starters_--;
            }
            work_chunks();
        }
    }

    void work_chunks() {
        const auto* body = body_;
        for (;;) {
            size_t lo = next_.fetch_add(chunk_, std::memory_order_relaxed);
            if (lo >= limit_) break;
            (*body)(lo, std::min(lo + chunk_, limit_));
        }
        if (pending_.fetch_sub(1, std::memory_order_acq_rel) == 1) {
            std::lock_guard<std::mutex> lk(mutex_);
            done_cv_.notify_all();
        }
    }

    std::vector<std::thread> workers_;
    std::mutex job_mutex_;
    std::mutex mutex_;
    std::condition_variable cv_;
    std::condition_variable done_cv_;
    uint64_t generation_ = 0;
    size_t starters_ = 0;
    bool stop_ = false;
    const std::function<void(size_t, size_t)>* body_ = nullptr;
    size_t limit_ = 0;
    size_t chunk_ = 1;
    std::atomic<size_t> next_{0};
    std::atomic<size_t> pending_{0};
};

}  // namespace detail

// Runs body(lo, hi) over a partition of [0, n). Stays serial when the total
// work is below min_parallel_work (units are up to the caller, typically
// multiply-accumulates).
inline void parallel_for(size_t n, size_t total_work, size_t min_parallel_work,
                         const std::function<void(size_t, size_t)>& body) {
    if (n == 0) return;
    if (worker_threads() == 1 || total_work < min_parallel_work) {
        body(0, n);
        return;
    }
    detail::ThreadPool::instance().parallel_for(n, body);
}

}  // namespace vitstr
