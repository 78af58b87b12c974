#pragma once

namespace splitsplat {

/// Environment variable consulted for the default worker count.
inline constexpr const char* kThreadsEnv = "SPLITSPLAT_THREADS";

/// Sets the worker count for all parallel kernels; n <= 0 restores the default.
void set_threads(int n);
int thread_count();
/// Reads kThreadsEnv if set; otherwise leaves the OpenMP default untouched.
void init_threads_from_env();

/// Restores the previous worker count on destruction.
class ScopedThreads {
public:
    explicit ScopedThreads(int n);
    ~ScopedThreads();
    ScopedThreads(const ScopedThreads&) = delete;
    ScopedThreads& operator=(const ScopedThreads&) = delete;

private:
    int previous_;
};

}  // namespace splitsplat
