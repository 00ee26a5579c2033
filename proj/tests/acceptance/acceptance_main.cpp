#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "kuramoto/acceptance.hpp"

// Usage: acceptance_suite [id ...]; runs all criteria when no id is given.
int main(int argc, char** argv) {
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) {
    char* end = nullptr;
    const long id = std::strtol(argv[i], &end, 10);
    if (*end != '\0' || id < 1) {
      std::fprintf(stderr, "acceptance_suite: bad criterion id '%s'\n", argv[i]);
      return 1;
    }
    only.push_back(static_cast<int>(id));
  }
  const auto results = kuramoto::acceptance::run_all(only, [](const kuramoto::acceptance::Outcome& o) {
    std::printf("%s\n", kuramoto::acceptance::format(o).c_str());
    std::fflush(stdout);
  });
  int failed = 0;
  for (const auto& o : results) failed += o.pass ? 0 : 1;
  std::printf("%d of %zu criteria passed\n", static_cast<int>(results.size()) - failed, results.size());
  return failed == 0 && !results.empty() ? 0 : 1;
}
