#ifndef EVOGA_BLAS_ENV_HPP
#define EVOGA_BLAS_ENV_HPP

#include <cstdlib>
#include <unistd.h>

namespace evoga {

// OpenBLAS picks its compute kernel from the CPU model number in a library
// constructor, which falls back to the slow SSE2 kernel on VMs that mask
// CPUID model info. The kernel is chosen before main() runs, so the only way
// to override it from inside the program is to set OPENBLAS_CORETYPE from the
// CPU feature flags and re-exec. Call first thing in main(); an explicit
// OPENBLAS_CORETYPE in the environment wins.
inline void ensure_fast_blas_kernel(char** argv) {
    if (std::getenv("OPENBLAS_CORETYPE") != nullptr) return;
    const char* core = nullptr;
    if (__builtin_cpu_supports("avx512f"))
        core = "SKYLAKEX";
    else if (__builtin_cpu_supports("avx2"))
        core = "HASWELL";
    if (core == nullptr) return;
    setenv("OPENBLAS_CORETYPE", core, 1);
    execv("/proc/self/exe", argv);
    // exec failed; continue with the default kernel
}

}  // namespace evoga

#endif
