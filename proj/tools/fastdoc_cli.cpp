// Copyright 2026 The FastDoc Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

int main(int argc, char** argv) { return fastdoc::cli::run(argc, argv); }
