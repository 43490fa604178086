/*
 * Copyright 2026 ICMT Contributors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "icmt/cluster.hpp"
#include "icmt/dataset.hpp"
#include "icmt/errors.hpp"
#include "icmt/io.hpp"
#include "icmt/lossgrad.hpp"
#include "icmt/metrics.hpp"
#include "icmt/model.hpp"
#include "icmt/pareto.hpp"
#include "icmt/rng.hpp"
#include "icmt/sampling.hpp"
#include "icmt/synth.hpp"
#include "icmt/trainer.hpp"
