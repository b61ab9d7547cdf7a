#pragma once

#include <cstdint>

// Call-count instrumentation for the expensive kernels. Counting is active only
// inside a ScopedCounters on the current thread, so the kernels stay pure when
// nobody is listening.
namespace trajinf::instrument {

struct Counters {
  std::int64_t hessian_factorizations = 0;
  std::int64_t downdate_factorizations = 0;  // (H - H_k) factorizations
  std::int64_t forward_lyapunov_solves = 0;
  std::int64_t adjoint_lyapunov_solves = 0;
  std::int64_t dare_solves = 0;
  std::int64_t trace_assemblies = 0;
};

class ScopedCounters {
 public:
  ScopedCounters();
  ~ScopedCounters();
  ScopedCounters(const ScopedCounters&) = delete;
  ScopedCounters& operator=(const ScopedCounters&) = delete;

  const Counters& counts() const { return counts_; }

 private:
  Counters counts_;
  Counters* previous_;
};

void count_hessian_factorization();
void count_downdate_factorization();
void count_forward_lyapunov_solve();
void count_adjoint_lyapunov_solve();
void count_dare_solve();
void count_trace_assemblies(std::int64_t n);

}  // namespace trajinf::instrument
