// Copyright 2026 The longconv Authors
// SPDX-License-Identifier: Apache-2.0
//
// The `longconv` command line: score, decode, augment and reconcile.

#pragma once

#include <iosfwd>

namespace longconv::cli {

enum ExitCode : int {
  kOk = 0,
  kValidation = 2,
  kModelContract = 3,
  kIo = 4,
};

/// Runs one command line. Reports go to `out` unless an output file is
/// given; diagnostics and logs go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace longconv::cli
