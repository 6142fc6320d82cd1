#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "rogmc/kernels.hpp"

#if defined(ROGMC_HAVE_AVX2)
#include "avx2_table.hpp"
#endif

namespace rogmc::kernels {
namespace {

bool cpu_has_avx2() noexcept {
#if defined(ROGMC_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable* resolve_default() {
    const char* env = std::getenv("ROGMC_KERNELS");
    if (env != nullptr && *env != '\0' && std::string_view(env) != "auto") {
        if (std::string_view(env) == "scalar") return &scalar_table();
        if (std::string_view(env) != "avx2") {
            std::fprintf(stderr, "warning: ignoring unknown ROGMC_KERNELS value '%s'\n", env);
        } else if (avx2_table() == nullptr) {
            std::fprintf(stderr, "warning: ROGMC_KERNELS=avx2 requested but unavailable, using scalar\n");
            return &scalar_table();
        }
    }
    if (const KernelTable* t = avx2_table()) return t;
    return &scalar_table();
}

std::atomic<const KernelTable*>& current() {
    static std::atomic<const KernelTable*> table{resolve_default()};
    return table;
}

}  // namespace

std::string_view backend_name(Backend backend) noexcept {
    return backend == Backend::avx2 ? "avx2" : "scalar";
}

Backend parse_backend(std::string_view name) {
    if (name == "scalar") return Backend::scalar;
    if (name == "avx2") return Backend::avx2;
    throw std::invalid_argument("unknown kernel backend '" + std::string(name) + "'");
}

const KernelTable* avx2_table() noexcept {
#if defined(ROGMC_HAVE_AVX2)
    static const bool supported = cpu_has_avx2();
    if (supported) return &detail::avx2_kernels();
#endif
    return nullptr;
}

bool backend_available(Backend backend) noexcept {
    return backend == Backend::scalar || avx2_table() != nullptr;
}

const KernelTable& active() noexcept { return *current().load(std::memory_order_acquire); }

void select_backend(Backend backend) {
    if (backend == Backend::scalar) {
        current().store(&scalar_table(), std::memory_order_release);
        return;
    }
    const KernelTable* t = avx2_table();
    if (t == nullptr) throw std::invalid_argument("AVX2 kernels are not available on this machine");
    current().store(t, std::memory_order_release);
}

}  // namespace rogmc::kernels
