// Copyright 2026 The ragval Authors.
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

#include <span>
#include <vector>

namespace ragval::stats {

double mean(std::span<const double> xs);

// Linear-interpolation quantile over a sorted sample (Hyndman-Fan type 7,
// the numpy default). p in [0,1]; sample must be non-empty.
double quantile_sorted(std::span<const double> sorted, double p);

// Copies, sorts and calls quantile_sorted.
double quantile(std::span<const double> xs, double p);

}  // namespace ragval::stats
