// Runs acceptance criteria and prints one line each.
// usage: acceptance [id ...]   (all when no id is given)
//        acceptance --sabotage <id>   (criterion 1 with a perturbed hbar)

#include <cstdlib>
#include <cstring>
#include <iostream>
#include <vector>

#include "arrival/acceptance.hpp"

int main(int argc, char** argv) {
  using namespace arrival::acceptance;
  Options o;
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--sabotage") == 0) {
      o.hbar_perturbation = 1e-3;
      continue;
    }
    ids.push_back(std::atoi(argv[i]));
  }
  if (ids.empty()) ids = criterion_ids();
  bool ok = true;
  for (int id : ids) {
    auto r = run_criterion(id, o);
    std::cout << report_line(r) << "\n";
    for (const auto& n : r.notes) std::cout << "    note: " << n << "\n";
    std::cout.flush();
    ok = ok && r.pass;
  }
  return ok ? 0 : 1;
}
