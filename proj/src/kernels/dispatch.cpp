#include <cstdlib>
#include <string>

#include "kernels_internal.hpp"

namespace polyfa::kernels {

std::string_view to_string(Isa isa) {
  return isa == Isa::avx2 ? "avx2" : "scalar";
}

bool supported(Isa isa) {
  if (isa == Isa::scalar) return true;
#if defined(POLYFA_HAVE_AVX2_TU)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {

Isa select_isa() {
  if (const char* env = std::getenv("POLYFA_KERNELS")) {
    const std::string want(env);
    if (want == "scalar") return Isa::scalar;
    if (want == "avx2" && supported(Isa::avx2)) return Isa::avx2;
  }
  return supported(Isa::avx2) ? Isa::avx2 : Isa::scalar;
}

}  // namespace

Isa active_isa() {
  static const Isa isa = select_isa();
  return isa;
}

const KernelTable& table(Isa isa) {
#if defined(POLYFA_HAVE_AVX2_TU)
  if (isa == Isa::avx2 && supported(Isa::avx2)) return kAvx2Table;
#endif
  (void)isa;
  return kScalarTable;
}

const KernelTable& active() {
  static const KernelTable& t = table(active_isa());
  return t;
}

void linear_predictor(std::span<const double> beta, std::span<const double> factors,
                      std::span<double> eta) {
  const std::size_t n = eta.size();
  if (factors.size() != beta.size() * n)
    throw DimensionError("linear_predictor: factors must be q x n");
  active().linear_predictor(beta.data(), beta.size(), factors.data(), n, eta.data());
}

void ordinal_logprob(LinkKind link, std::span<const double> lower,
                     std::span<const double> upper, std::span<const double> eta,
                     double inv_sigma, std::span<double> out) {
  const std::size_t n = out.size();
  if (lower.size() != n || upper.size() != n || eta.size() != n)
    throw DimensionError("ordinal_logprob: length mismatch");
  active().ordinal_logprob(link, lower.data(), upper.data(), eta.data(), inv_sigma, n,
                           out.data());
}

void nominal_logprob(std::span<const double> scores, std::size_t categories,
                     std::span<const int> y, std::span<double> out) {
  const std::size_t n = out.size();
  if (categories < 2 || scores.size() != (categories - 1) * n || y.size() != n)
    throw DimensionError("nominal_logprob: shape mismatch");
  active().nominal_logprob(scores.data(), categories, y.data(), n, out.data());
}

double sum(std::span<const double> x) { return active().sum(x.data(), x.size()); }

}  // namespace polyfa::kernels
