#pragma once

namespace mtf::parallel {

// Worker count used by the OpenMP kernels and the sweep runner. Starts at the
// value of MANIFOLD_MTF_THREADS when set, otherwise 1.
int thread_count();
void set_thread_count(int n);

}  // namespace mtf::parallel
