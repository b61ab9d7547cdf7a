#include "trajinf/instrument.hpp"

namespace trajinf::instrument {
namespace {
thread_local Counters* active = nullptr;
}  // namespace

ScopedCounters::ScopedCounters() : previous_(active) { active = &counts_; }
ScopedCounters::~ScopedCounters() { active = previous_; }

void count_hessian_factorization() {
  if (active) ++active->hessian_factorizations;
}
void count_downdate_factorization() {
  if (active) ++active->downdate_factorizations;
}
void count_forward_lyapunov_solve() {
  if (active) ++active->forward_lyapunov_solves;
}
void count_adjoint_lyapunov_solve() {
  if (active) ++active->adjoint_lyapunov_solves;
}
void count_dare_solve() {
  if (active) ++active->dare_solves;
}
void count_trace_assemblies(std::int64_t n) {
  if (active) active->trace_assemblies += n;
}

}  // namespace trajinf::instrument
