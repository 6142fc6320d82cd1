#include <cmath>

#include "rogmc/kernels.hpp"

namespace rogmc::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) sum += a[k] * b[k];
    return sum;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) y[k] += alpha * x[k];
}

void scale_scalar(double alpha, double* x, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) x[k] *= alpha;
}

double squared_distance_scalar(const double* a, const double* b, std::size_t n) {
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double diff = a[k] - b[k];
        sum += diff * diff;
    }
    return sum;
}

void spmm_scalar(const CsrView& a, const double* x, double* y, std::size_t dim) {
    for (std::size_t i = 0; i < a.num_rows; ++i) {
        double* out = y + i * dim;
        for (std::size_t k = 0; k < dim; ++k) out[k] = 0.0;
        for (std::size_t e = a.row_offsets[i]; e < a.row_offsets[i + 1]; ++e) {
            const double w = a.weights[e];
            const double* src = x + static_cast<std::size_t>(a.columns[e]) * dim;
            for (std::size_t k = 0; k < dim; ++k) out[k] += w * src[k];
        }
    }
}

void adam_update_scalar(const AdamCoefficients& c, const double* grad, double* param, double* m,
                        double* v, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
        const double g = grad[k];
        m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g;
        v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g * g;
        const double m_hat = m[k] / c.bias_correction1;
        const double v_hat = v[k] / c.bias_correction2;
        param[k] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
}

constexpr KernelTable kScalarTable{
    Backend::scalar, dot_scalar, axpy_scalar, scale_scalar, squared_distance_scalar,
    spmm_scalar,     adam_update_scalar,
};

}  // namespace

const KernelTable& scalar_table() noexcept { return kScalarTable; }

}  // namespace rogmc::kernels
