#include "polycert/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace polycert::kernels {

#if !defined(__x86_64__) && !defined(_M_X64) && !defined(__aarch64__)
const Backend* simd_backend() { return nullptr; }
#endif

namespace {

bool cpu_has_simd() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#elif defined(__aarch64__)
    return true;
#else
    return false;
#endif
}

const Backend& select() {
    const char* force = std::getenv("POLYCERT_KERNELS");
    if (force != nullptr && std::strcmp(force, "scalar") == 0) {
        return scalar_backend();
    }
    const Backend* simd = simd_backend();
    if (simd != nullptr && cpu_has_simd()) return *simd;
    return scalar_backend();
}

}  // namespace

const Backend& backend() {
    static const Backend& chosen = select();
    return chosen;
}

}  // namespace polycert::kernels
