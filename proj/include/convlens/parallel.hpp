/*
 * Copyright 2026 The convlens Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

namespace convlens {

/// Caps the number of threads used by the parallel kernels. Values < 1 are ignored.
void set_max_threads(int threads);
int max_threads();

/// Applies CONVLENS_THREADS from the environment if it holds a positive integer.
/// Returns false when the variable is set but invalid.
bool apply_thread_limit_from_env();

}  // namespace convlens
