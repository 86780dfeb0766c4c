#include <cstdlib>
#include <string_view>

#include "metahybrid/common.hpp"
#include "metahybrid/kernels.hpp"

namespace metahybrid::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(METAHYBRID_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& select_active() {
  if (const char* forced = std::getenv("METAHYBRID_ISA")) {
    if (std::string_view(forced) == "scalar") return scalar_table();
  }
  const auto isas = available_isas();
  return table_for(isas.back());
}

}  // namespace

std::vector<Isa> available_isas() {
  std::vector<Isa> out{Isa::Scalar};
  if (cpu_has_avx2()) out.push_back(Isa::Avx2);
  return out;
}

const KernelTable& table_for(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return scalar_table();
    case Isa::Avx2:
#if defined(METAHYBRID_HAVE_AVX2)
      if (cpu_has_avx2()) return avx2_table();
#endif
      throw InvalidArgument("AVX2 kernels not available on this build or CPU");
  }
  throw InvalidArgument("unknown ISA");
}

const KernelTable& active() {
  static const KernelTable& table = select_active();
  return table;
}

}  // namespace metahybrid::kernels
