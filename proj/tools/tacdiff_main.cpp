// Copyright 2026 The tacdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include <malloc.h>

#include "tacdiff/cli.hpp"

int main(int argc, char** argv) {
  // Large activation buffers are reused every step; keep them off mmap.
  mallopt(M_MMAP_THRESHOLD, 1 << 28);
  mallopt(M_TRIM_THRESHOLD, 1 << 29);
  return tacdiff::cli::run_cli(argc, argv);
}
