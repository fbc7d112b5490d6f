// Copyright 2026 The medtk Authors
// SPDX-License-Identifier: Apache-2.0

#include "app.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return medtk::cli::run(args);
}
