#include "medtest/kernels.hpp"

#include <atomic>
#include <stdexcept>
#include <string>

namespace medtest::kernels {

namespace {

struct Vtable {
  double (*dot)(const double*, const double*, std::size_t);
  double (*sum)(const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  std::size_t (*count_less)(const double*, std::size_t, double);
  const char* name;
};

constexpr Vtable kScalar{detail::dot_scalar, detail::sum_scalar,
                         detail::axpy_scalar, detail::count_less_scalar,
                         "scalar"};

#if defined(__x86_64__) || defined(_M_X64)
constexpr Vtable kAvx2{detail::dot_avx2, detail::sum_avx2, detail::axpy_avx2,
                       detail::count_less_avx2, "avx2"};

bool avx2_supported() { return __builtin_cpu_supports("avx2"); }
#endif

const Vtable* pick_default() {
#if defined(__x86_64__) || defined(_M_X64)
  if (avx2_supported()) return &kAvx2;
#endif
  return &kScalar;
}

std::atomic<const Vtable*> g_active{nullptr};

const Vtable& active() {
  const Vtable* v = g_active.load(std::memory_order_acquire);
  if (v == nullptr) {
    v = pick_default();
    g_active.store(v, std::memory_order_release);
  }
  return *v;
}

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("kernels::dot: length mismatch");
  return active().dot(a.data(), b.data(), a.size());
}

double sum(std::span<const double> a) { return active().sum(a.data(), a.size()); }

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("kernels::axpy: length mismatch");
  active().axpy(alpha, x.data(), y.data(), x.size());
}

std::size_t count_less(std::span<const double> a, double threshold) {
  return active().count_less(a.data(), a.size(), threshold);
}

std::string_view active_variant() { return active().name; }

void force_variant(std::string_view name) {
  if (name == "scalar") {
    g_active.store(&kScalar, std::memory_order_release);
    return;
  }
#if defined(__x86_64__) || defined(_M_X64)
  if (name == "avx2") {
    if (!avx2_supported())
      throw std::invalid_argument("kernels: avx2 not supported on this CPU");
    g_active.store(&kAvx2, std::memory_order_release);
    return;
  }
#endif
  throw std::invalid_argument("kernels: unknown variant '" + std::string(name) + "'");
}

}  // namespace medtest::kernels
