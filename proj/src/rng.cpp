#include "bell/rng.hpp"

#include <atomic>
#include <cstdlib>
#include <mutex>
#include <string>

namespace bell {

namespace {

int initial_worker_count() {
    const char* env = std::getenv("BELL_THREADS");
    if (!env) return 1;
    try {
        const int n = std::stoi(env);
        if (n >= 1) return n;
    } catch (const std::exception&) {
    }
    return 1;
}

std::atomic<int>& worker_count_slot() {
    static std::atomic<int> count{initial_worker_count()};
    return count;
}

}  // namespace

int worker_count() { return worker_count_slot().load(); }

void set_worker_count(int n) { worker_count_slot().store(n < 1 ? 1 : n); }

void parallel_for_blocks(std::size_t n_blocks,
                         const std::function<void(std::size_t)>& fn) {
    const int workers = worker_count();
    if (workers <= 1 || n_blocks <= 1) {
        for (std::size_t b = 0; b < n_blocks; ++b) fn(b);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mu;
    auto body = [&] {
        for (;;) {
            const std::size_t b = next.fetch_add(1);
            if (b >= n_blocks) return;
            try {
                fn(b);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const int n_threads = static_cast<int>(
        std::min<std::size_t>(static_cast<std::size_t>(workers), n_blocks));
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(body);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace bell
