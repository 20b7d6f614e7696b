// Copyright (c) 2026 The glucodg Authors. All rights reserved.
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
//
// Convenience umbrella for the whole library.

#ifndef GLUCODG_GLUCODG_HPP_
#define GLUCODG_GLUCODG_HPP_

#include "glucodg/core.hpp"        // IWYU pragma: export
#include "glucodg/evaluation.hpp"  // IWYU pragma: export
#include "glucodg/forest.hpp"      // IWYU pragma: export
#include "glucodg/ingest.hpp"      // IWYU pragma: export
#include "glucodg/io.hpp"          // IWYU pragma: export
#include "glucodg/meta_forests.hpp"  // IWYU pragma: export
#include "glucodg/metrics.hpp"     // IWYU pragma: export
#include "glucodg/mixedlm.hpp"     // IWYU pragma: export
#include "glucodg/mixup.hpp"       // IWYU pragma: export
#include "glucodg/mmd.hpp"         // IWYU pragma: export
#include "glucodg/parallel.hpp"    // IWYU pragma: export
#include "glucodg/pipeline.hpp"    // IWYU pragma: export
#include "glucodg/rng.hpp"         // IWYU pragma: export
#include "glucodg/synth.hpp"       // IWYU pragma: export

#endif  // GLUCODG_GLUCODG_HPP_
