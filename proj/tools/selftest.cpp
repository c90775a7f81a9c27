// Runs the oracle suites behind the `selftest` subcommand. Prints one line
// per suite; exits nonzero when any suite disagrees.

#include <cstdio>
#include <vector>

#include "support/selftest_suites.hpp"

int run_selftest() {
  std::vector<selftest::Suite> suites;
  selftest::run_centrality_suites(suites);
  selftest::run_gbdt_oracle_suites(suites);
  selftest::run_monotonicity_suite(suites);

  bool all_ok = true;
  for (const auto& s : suites) {
    if (s.ok) {
      std::printf("selftest %-60s PASS (worst %.3g)\n", s.name.c_str(), s.worst);
    } else {
      all_ok = false;
      std::printf("selftest %-60s FAIL (worst %.3g at %s)\n", s.name.c_str(), s.worst,
                  s.detail.c_str());
    }
  }
  return all_ok ? 0 : 2;
}
