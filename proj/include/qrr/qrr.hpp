// Copyright 2026 The qrr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "qrr/bounds.hpp"
#include "qrr/correlation.hpp"
#include "qrr/error.hpp"
#include "qrr/experiments.hpp"
#include "qrr/formats.hpp"
#include "qrr/instance_io.hpp"
#include "qrr/parallel.hpp"
#include "qrr/problem.hpp"
#include "qrr/rounding.hpp"
#include "qrr/samples.hpp"
#include "qrr/simulator.hpp"

namespace qrr {

inline constexpr const char *kVersion = "0.1.0";

}  // namespace qrr
