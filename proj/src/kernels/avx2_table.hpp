#pragma once

#include "rogmc/kernels.hpp"

namespace rogmc::kernels::detail {

// Defined in avx2.cpp, which is built with -mavx2 -mfma. Calling any entry
// on a CPU without those extensions is undefined; dispatch checks first.
const KernelTable& avx2_kernels() noexcept;

}  // namespace rogmc::kernels::detail
