#include <iostream>
#include <string>

#include "strata/validation.hpp"

// Runs every acceptance check and prints one line per criterion.
// Optional: acceptance <embeddings> <vocab> enables the real-embedding check.
int main(int argc, char** argv) {
  strata::ValidationOptions opt;
  opt.seed = 1;
  if (argc >= 3) {
    opt.embeddings = argv[1];
    opt.vocab = argv[2];
  }
  const auto results = strata::run_validation(opt);
  for (const auto& r : results) std::cout << strata::format_result_line(r) << std::endl;
  const bool ok = strata::all_gating_passed(results);
  std::cout << (ok ? "ACCEPTANCE PASSED" : "ACCEPTANCE FAILED") << std::endl;
  return ok ? 0 : 1;
}
