// Copyright 2026 The tfbell Authors
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


#ifndef TFBELL_TFBELL_HPP
#define TFBELL_TFBELL_HPP

#include "tfbell/bell.hpp"
#include "tfbell/core.hpp"
#include "tfbell/error.hpp"
#include "tfbell/io.hpp"
#include "tfbell/lhv.hpp"
#include "tfbell/pipeline.hpp"
#include "tfbell/simplex.hpp"
#include "tfbell/simulate.hpp"
#include "tfbell/stats.hpp"
#include "tfbell/wrapfit.hpp"

#endif  // TFBELL_TFBELL_HPP
