#include <cstdlib>
#include <string_view>

#include "herdtwin/simd/kernels.hpp"

namespace herdtwin::simd {

#if !defined(HERDTWIN_HAVE_AVX2_TU)
namespace detail {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace detail
#endif

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(HERDTWIN_HAVE_AVX2_TU) && (defined(__GNUC__) || defined(__clang__))
      return detail::avx2_table() != nullptr && __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

std::string_view isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

Isa active_isa() {
  static const Isa chosen = [] {
    if (const char* forced = std::getenv("HERDTWIN_ISA")) {
      const std::string_view value(forced);
      if (value == "scalar") return Isa::Scalar;
      if (value == "avx2" && isa_available(Isa::Avx2)) return Isa::Avx2;
    }
    return isa_available(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar;
  }();
  return chosen;
}

const KernelTable& kernels(Isa isa) {
  if (isa == Isa::Avx2 && isa_available(Isa::Avx2)) return *detail::avx2_table();
  return detail::scalar_table();
}

const KernelTable& kernels() {
  static const KernelTable& table = kernels(active_isa());
  return table;
}

}  // namespace herdtwin::simd
