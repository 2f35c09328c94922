// Copyright 2026 The longconv Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "longconv/cli.hpp"

int main(int argc, char** argv) { return longconv::cli::run(argc, argv, std::cout, std::cerr); }
