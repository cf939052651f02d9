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

#include <cstddef>

#include "convlens/network.hpp"
#include "convlens/tensor.hpp"

namespace convlens {

/// Gradient of logit[class_index] with respect to the output of `target_layer`.
///
/// Walks the layers from the logits back to target_layer + 1, applying the
/// local adjoint of each one. Softmax is not traversed. The trace must come
/// from a forward pass on `net` that recorded backward bookkeeping from
/// `target_layer` onward (ForwardOptions::backward_from).
///
/// Throws RangeError for a bad class index, BackwardError when the target lies
/// in the classifier head or the trace lacks bookkeeping.
Tensor backward_to_layer(const Network& net, const ActivationTrace& trace, std::size_t class_index,
                         std::size_t target_layer);

}  // namespace convlens
