#pragma once

// Data-parallel inner loops. Every kernel has a scalar reference version and,
// on x86-64, an AVX2+FMA version picked at runtime. Both live behind one
// function table so the numeric code never branches on the ISA itself.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace rogmc::kernels {

enum class Backend { scalar, avx2 };

std::string_view backend_name(Backend backend) noexcept;

// Read-only view of a CSR adjacency with per-edge weights.
struct CsrView {
    std::size_t num_rows = 0;
    const std::size_t* row_offsets = nullptr;  // num_rows + 1 entries
    const std::uint32_t* columns = nullptr;
    const double* weights = nullptr;
};

struct AdamCoefficients {
    double learning_rate;
    double beta1;
    double beta2;
    double epsilon;
    double bias_correction1;  // 1 - beta1^t
    double bias_correction2;  // 1 - beta2^t
};

struct KernelTable {
    Backend backend;
    double (*dot)(const double* a, const double* b, std::size_t n);
    // y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // x *= alpha
    void (*scale)(double alpha, double* x, std::size_t n);
    // sum_k (a_k - b_k)^2
    double (*squared_distance)(const double* a, const double* b, std::size_t n);
    // y = A x with x, y row-major (num_rows x dim). Rows of A are summed in
    // stored column order, so results are reproducible for a fixed backend.
    void (*spmm)(const CsrView& a, const double* x, double* y, std::size_t dim);
    // In-place bias-corrected Adam update over n parameters.
    void (*adam_update)(const AdamCoefficients& c, const double* grad, double* param, double* m,
                        double* v, std::size_t n);
};

const KernelTable& scalar_table() noexcept;

// Null when the build or the CPU lacks the ISA.
const KernelTable* avx2_table() noexcept;

bool backend_available(Backend backend) noexcept;

// Active table. First use resolves ROGMC_KERNELS=scalar|avx2|auto (default auto).
const KernelTable& active() noexcept;

// Throws std::invalid_argument when the backend is unavailable.
void select_backend(Backend backend);

Backend parse_backend(std::string_view name);

// Span conveniences over the active table.
inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
    return active().dot(a.data(), b.data(), a.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept {
    active().axpy(alpha, x.data(), y.data(), y.size());
}
inline void scale(double alpha, std::span<double> x) noexcept {
    active().scale(alpha, x.data(), x.size());
}
inline double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
    return active().squared_distance(a.data(), b.data(), a.size());
}

}  // namespace rogmc::kernels
