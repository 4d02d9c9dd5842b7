#include <atomic>
#include <cstdlib>
#include <string>

#include "vbll/kernels.hpp"

namespace vbll::kernels {

#if defined(VBLL_HAVE_AVX2)
const KernelTable* avx2_table_impl();
#endif
#if defined(VBLL_HAVE_NEON)
const KernelTable* neon_table_impl();
#endif

const KernelTable* avx2_table() {
#if defined(VBLL_HAVE_AVX2)
  if (__builtin_cpu_supports("avx2")) return avx2_table_impl();
#endif
  return nullptr;
}

const KernelTable* neon_table() {
#if defined(VBLL_HAVE_NEON)
  return neon_table_impl();
#else
  return nullptr;
#endif
}

std::vector<const KernelTable*> available() {
  std::vector<const KernelTable*> out{&scalar_table()};
  if (const auto* t = avx2_table()) out.push_back(t);
  if (const auto* t = neon_table()) out.push_back(t);
  return out;
}

namespace {

const KernelTable* find(std::string_view name) {
  for (const auto* t : available()) {
    if (name == t->name) return t;
  }
  return nullptr;
}

const KernelTable* resolve_default() {
  if (const char* env = std::getenv("VBLL_KERNELS"); env != nullptr && *env != '\0') {
    if (const auto* t = find(env)) return t;
  }
  const auto all = available();
  return all.back();
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> current{resolve_default()};
  return current;
}

}  // namespace

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

bool select(std::string_view name) {
  const auto* t = find(name);
  if (t == nullptr) return false;
  slot().store(t, std::memory_order_release);
  return true;
}

}  // namespace vbll::kernels
