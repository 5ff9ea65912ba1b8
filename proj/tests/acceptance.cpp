// Copyright 2026 The ellspec Authors
// SPDX-License-Identifier: Apache-2.0

// Runs every acceptance criterion at its pinned tolerance and prints one
// pass/fail line per criterion. Exit status 0 iff all criteria pass.
// Usage: acceptance [--quick] [--threads N]

#include <cstdlib>
#include <cstring>
#include <iostream>

#include "ellspec/acceptance.hpp"

int main(int argc, char** argv) {
  ellspec::AcceptanceOptions opt;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--quick") == 0) {
      opt.tier = ellspec::Tier::Quick;
    } else if (std::strcmp(argv[i], "--threads") == 0 && i + 1 < argc) {
      opt.threads = std::atoi(argv[++i]);
    } else {
      std::cerr << "usage: acceptance [--quick] [--threads N]\n";
      return 2;
    }
  }
  int failed = 0;
  ellspec::run_acceptance(opt, [&](const ellspec::CriterionResult& r) {
    std::cout << ellspec::format_result(r) << std::endl;
    failed += r.passed ? 0 : 1;
  });
  std::cout << (failed == 0 ? "ALL CRITERIA PASSED" : std::to_string(failed) + " of 11 criteria FAILED") << std::endl;
  return failed == 0 ? 0 : 1;
}
