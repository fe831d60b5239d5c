// Copyright 2026 The cosine-audit Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "cosaudit/analysis.hpp"
#include "cosaudit/io.hpp"
#include "cosaudit/matrix_core.hpp"
#include "cosaudit/mf_solvers.hpp"
#include "cosaudit/random.hpp"
#include "cosaudit/remedies.hpp"
#include "cosaudit/rescale.hpp"
#include "cosaudit/similarity.hpp"
#include "cosaudit/synthgen.hpp"
