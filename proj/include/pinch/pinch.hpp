// SPDX-License-Identifier: Apache-2.0
//
// pinch-robust: robust power allocation and antenna placement for
// pinching-antenna waveguide systems
// Copyright (C) 2026 The pinch-robust authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include "pinch/core_model.hpp"
#include "pinch/experiment.hpp"
#include "pinch/multi_pa.hpp"
#include "pinch/random.hpp"
#include "pinch/single_pa.hpp"
#include "pinch/validation.hpp"
#include "pinch/worst_case.hpp"
