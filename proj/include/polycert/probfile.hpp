#pragma once

#include <string>

#include "polycert/poly.hpp"

// Reader/writer for the text problem format:
//
//   # comment
//   vars: x1 x2
//   minimize: x1^2 + x2^2
//   subject_to:
//   x1 + x2 - 1 == 0
//   x1 >= 0
//
// The subject_to section is optional; constraint lines end in "== 0" or
// ">= 0".

namespace polycert::probfile {

poly::ProblemInstance parse_problem(const std::string& text);
poly::ProblemInstance read_problem(const std::string& path);

std::string problem_to_string(const poly::ProblemInstance& inst);
void write_problem(const poly::ProblemInstance& inst, const std::string& path);

}  // namespace polycert::probfile
