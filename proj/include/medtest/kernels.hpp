#pragma once

// Data-parallel reduction kernels used by the regression engine and the
// simulation metric pipeline. Scalar reference implementations always
// exist; an AVX2 variant is selected once at startup when the CPU
// supports it. Variants are equivalence-tested against the scalar path.

#include <cstddef>
#include <span>
#include <string_view>

namespace medtest::kernels {

// sum_i a[i] * b[i]
double dot(std::span<const double> a, std::span<const double> b);

// sum_i a[i]
double sum(std::span<const double> a);

// y[i] += alpha * x[i]
void axpy(double alpha, std::span<const double> x, std::span<double> y);

// #{ i : a[i] < threshold }
std::size_t count_less(std::span<const double> a, double threshold);

// Name of the active variant ("scalar" or "avx2").
std::string_view active_variant();

// Force a variant by name; throws std::invalid_argument for an unknown
// name or an unsupported one. Intended for tests.
void force_variant(std::string_view name);

namespace detail {
double dot_scalar(const double* a, const double* b, std::size_t n);
double sum_scalar(const double* a, std::size_t n);
void axpy_scalar(double alpha, const double* x, double* y, std::size_t n);
std::size_t count_less_scalar(const double* a, std::size_t n, double threshold);

#if defined(__x86_64__) || defined(_M_X64)
double dot_avx2(const double* a, const double* b, std::size_t n);
double sum_avx2(const double* a, std::size_t n);
void axpy_avx2(double alpha, const double* x, double* y, std::size_t n);
std::size_t count_less_avx2(const double* a, std::size_t n, double threshold);
#endif
}  // namespace detail

}  // namespace medtest::kernels
