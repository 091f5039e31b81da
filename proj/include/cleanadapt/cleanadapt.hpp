// cleanadapt/cleanadapt.hpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "cleanadapt/adapt.hpp"
#include "cleanadapt/config.hpp"
#include "cleanadapt/data.hpp"
#include "cleanadapt/error.hpp"
#include "cleanadapt/eval.hpp"
#include "cleanadapt/model.hpp"
#include "cleanadapt/numerics.hpp"
#include "cleanadapt/rng.hpp"
#include "cleanadapt/selection.hpp"
