#include <iostream>

#include "acceptance/criteria.hpp"

int main(int argc, char** argv) {
  mamp::acceptance::Context ctx{argc > 1 ? argv[1] : MAMP_SCENARIO_DIR};
  const bool ok = mamp::acceptance::run_all(ctx, std::cout);
  std::cout << (ok ? "ALL CRITERIA PASS" : "SOME CRITERIA FAIL") << '\n';
  return ok ? 0 : 1;
}
