// Copyright 2026 The fleetrl Authors.
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

#ifndef FLEETRL_PARALLEL_HPP_
#define FLEETRL_PARALLEL_HPP_

#include <cstddef>
#include <functional>

namespace fleetrl {

// Worker cap: FLEETRL_THREADS if set to a positive integer, otherwise the
// hardware concurrency (at least 1).
unsigned thread_cap();

// Runs body(i) for i in [0, n) on up to thread_cap() threads. Each index is
// visited exactly once; the first exception thrown by any body is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace fleetrl

#endif  // FLEETRL_PARALLEL_HPP_
