#include <immintrin.h>

#include <cmath>

#include "avx2_table.hpp"

namespace rogmc::kernels::detail {
namespace {

inline double horizontal_sum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d pair = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 8 <= n; k += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k + 4), _mm256_loadu_pd(b + k + 4), acc1);
    }
    for (; k + 4 <= n; k += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc0);
    }
    double sum = horizontal_sum(_mm256_add_pd(acc0, acc1));
    for (; k < n; ++k) sum += a[k] * b[k];
    return sum;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        _mm256_storeu_pd(y + k, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + k), _mm256_loadu_pd(y + k)));
    }
    for (; k < n; ++k) y[k] += alpha * x[k];
}

void scale_avx2(double alpha, double* x, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) _mm256_storeu_pd(x + k, _mm256_mul_pd(va, _mm256_loadu_pd(x + k)));
    for (; k < n; ++k) x[k] *= alpha;
}

double squared_distance_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const __m256d diff = _mm256_sub_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k));
        acc = _mm256_fmadd_pd(diff, diff, acc);
    }
    double sum = horizontal_sum(acc);
    for (; k < n; ++k) {
        const double diff = a[k] - b[k];
        sum += diff * diff;
    }
    return sum;
}

// Columns are processed in 16-wide panels so the four accumulators stay in
// registers while the row's edges stream past.
void spmm_avx2(const CsrView& a, const double* x, double* y, std::size_t dim) {
    for (std::size_t i = 0; i < a.num_rows; ++i) {
        double* out = y + i * dim;
        const std::size_t begin = a.row_offsets[i];
        const std::size_t end = a.row_offsets[i + 1];
        std::size_t k = 0;
        for (; k + 16 <= dim; k += 16) {
            __m256d acc0 = _mm256_setzero_pd();
            __m256d acc1 = _mm256_setzero_pd();
            __m256d acc2 = _mm256_setzero_pd();
            __m256d acc3 = _mm256_setzero_pd();
            for (std::size_t e = begin; e < end; ++e) {
                const __m256d w = _mm256_set1_pd(a.weights[e]);
                const double* src = x + static_cast<std::size_t>(a.columns[e]) * dim + k;
                acc0 = _mm256_fmadd_pd(w, _mm256_loadu_pd(src), acc0);
                acc1 = _mm256_fmadd_pd(w, _mm256_loadu_pd(src + 4), acc1);
                acc2 = _mm256_fmadd_pd(w, _mm256_loadu_pd(src + 8), acc2);
                acc3 = _mm256_fmadd_pd(w, _mm256_loadu_pd(src + 12), acc3);
            }
            _mm256_storeu_pd(out + k, acc0);
            _mm256_storeu_pd(out + k + 4, acc1);
            _mm256_storeu_pd(out + k + 8, acc2);
            _mm256_storeu_pd(out + k + 12, acc3);
        }
        for (; k + 4 <= dim; k += 4) {
            __m256d acc = _mm256_setzero_pd();
            for (std::size_t e = begin; e < end; ++e) {
                const double* src = x + static_cast<std::size_t>(a.columns[e]) * dim + k;
                acc = _mm256_fmadd_pd(_mm256_set1_pd(a.weights[e]), _mm256_loadu_pd(src), acc);
            }
            _mm256_storeu_pd(out + k, acc);
        }
        for (; k < dim; ++k) {
            double acc = 0.0;
            for (std::size_t e = begin; e < end; ++e) {
                acc += a.weights[e] * x[static_cast<std::size_t>(a.columns[e]) * dim + k];
            }
            out[k] = acc;
        }
    }
}

void adam_update_avx2(const AdamCoefficients& c, const double* grad, double* param, double* m,
                      double* v, std::size_t n) {
    const __m256d b1 = _mm256_set1_pd(c.beta1);
    const __m256d one_minus_b1 = _mm256_set1_pd(1.0 - c.beta1);
    const __m256d b2 = _mm256_set1_pd(c.beta2);
    const __m256d one_minus_b2 = _mm256_set1_pd(1.0 - c.beta2);
    const __m256d inv_bc1 = _mm256_set1_pd(1.0 / c.bias_correction1);
    const __m256d inv_bc2 = _mm256_set1_pd(1.0 / c.bias_correction2);
    const __m256d lr = _mm256_set1_pd(c.learning_rate);
    const __m256d eps = _mm256_set1_pd(c.epsilon);
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const __m256d g = _mm256_loadu_pd(grad + k);
        const __m256d mk = _mm256_fmadd_pd(b1, _mm256_loadu_pd(m + k), _mm256_mul_pd(one_minus_b1, g));
        const __m256d vk = _mm256_fmadd_pd(b2, _mm256_loadu_pd(v + k),
                                           _mm256_mul_pd(one_minus_b2, _mm256_mul_pd(g, g)));
        _mm256_storeu_pd(m + k, mk);
        _mm256_storeu_pd(v + k, vk);
        const __m256d m_hat = _mm256_mul_pd(mk, inv_bc1);
        const __m256d v_hat = _mm256_mul_pd(vk, inv_bc2);
        const __m256d step = _mm256_div_pd(_mm256_mul_pd(lr, m_hat), _mm256_add_pd(_mm256_sqrt_pd(v_hat), eps));
        _mm256_storeu_pd(param + k, _mm256_sub_pd(_mm256_loadu_pd(param + k), step));
    }
    for (; k < n; ++k) {
        const double g = grad[k];
        m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g;
        v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g * g;
        const double m_hat = m[k] / c.bias_correction1;
        const double v_hat = v[k] / c.bias_correction2;
        param[k] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
}

constexpr KernelTable kAvx2Table{
    Backend::avx2, dot_avx2, axpy_avx2, scale_avx2, squared_distance_avx2, spmm_avx2, adam_update_avx2,
};

}  // namespace

const KernelTable& avx2_kernels() noexcept { return kAvx2Table; }

}  // namespace rogmc::kernels::detail
