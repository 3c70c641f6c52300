#pragma once

namespace atroreg {

// Caps internal parallelism (0 = runtime default). Per-row sums keep a fixed
// order, so results do not depend on the thread count.
void set_thread_cap(int threads);
int thread_cap();

// Reads ATROREG_THREADS, if set.
void apply_thread_env();

}  // namespace atroreg
