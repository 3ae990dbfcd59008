// Copyright (c) 2026 planerf contributors
// SPDX-License-Identifier: Apache-2.0
#include "planerf/cli.hpp"

int main(int argc, char** argv) { return planerf::run_cli(argc, argv); }
