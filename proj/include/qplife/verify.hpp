#pragma once

// Built-in oracle suite behind `qplife verify`.

#include <string>
#include <vector>

namespace qplife::verify {

struct Check {
  std::string name;
  bool passed = false;
  double value = 0.0;      ///< measured deviation or statistic
  double tolerance = 0.0;  ///< pass threshold on `value`
  std::string detail;
};

std::vector<Check> run_all();

}  // namespace qplife::verify
