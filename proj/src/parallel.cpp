#include "splitsplat/parallel.hpp"

#include <cstdlib>
#include <string>

#include <omp.h>

namespace splitsplat {

namespace {
int default_threads() {
    static const int n = omp_get_max_threads();
    return n;
}
}  // namespace

void set_threads(int n) {
    default_threads();
    omp_set_num_threads(n > 0 ? n : default_threads());
}

int thread_count() { return omp_get_max_threads(); }

void init_threads_from_env() {
    if (const char* v = std::getenv(kThreadsEnv)) {
        try {
            set_threads(std::stoi(v));
        } catch (...) {
        }
    }
}

ScopedThreads::ScopedThreads(int n) : previous_(thread_count()) { set_threads(n); }
ScopedThreads::~ScopedThreads() { omp_set_num_threads(previous_); }

}  // namespace splitsplat
