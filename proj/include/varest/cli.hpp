#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "varest/datagen.hpp"

namespace varest::cli {

// Spec strings accepted on the command line:
//   design:   uniform:a,b | comb:a,b;c,d;... | grid:d | diag:d | product:F*F*...
//   function: const:v | poly:c0,c1,... | sine:amp,freq[,phase] | bump:center,width,height
//             | sum:F+F+... | additive:F;F;... | @file.json
//   noise:    gaussian | rademacher | matched:q
DesignSpec parse_design(std::string_view text);
FunctionSpec parse_function(std::string_view text);
NoiseSpec parse_noise(std::string_view text);

enum ExitCode : int { kSuccess = 0, kRuntime = 1, kValidation = 2 };

/// Runs one command line (args excludes the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int main(int argc, char** argv);

}  // namespace varest::cli
