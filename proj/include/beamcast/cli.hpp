// SPDX-License-Identifier: Apache-2.0
//
// Command-line driver: gen-data, label, train, predict, eval, bench.
//
// Exit codes: 0 success, 1 internal, 2 usage, 3 corrupt file, 4 config, 5 version,
// 6 dimension, 7 numerical, 8 i/o. Failures print one line "error: <category>: <message>".
#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace beamcast {

enum ExitCode {
  kExitOk = 0,
  kExitInternal = 1,
  kExitUsage = 2,
  kExitCorrupt = 3,
  kExitConfig = 4,
  kExitVersion = 5,
  kExitDimension = 6,
  kExitNumerical = 7,
  kExitIo = 8,
};

/// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace beamcast
