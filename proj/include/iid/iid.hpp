// Copyright 2026 The IID Authors. All Rights Reserved.
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

#ifndef IID_IID_HPP
#define IID_IID_HPP

// Umbrella header for the algorithm modules (no file I/O).

#include "iid/clustering.hpp"
#include "iid/crf.hpp"
#include "iid/eval.hpp"
#include "iid/image.hpp"
#include "iid/imgcore.hpp"
#include "iid/intrinsics.hpp"
#include "iid/pipeline.hpp"
#include "iid/ratios.hpp"
#include "iid/retinex.hpp"
#include "iid/synth.hpp"

#endif  // IID_IID_HPP
