// lipnet/network-grad-check.h

// Copyright 2026  lipembed authors

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

#ifndef LIPEMBED_LIPNET_NETWORK_GRAD_CHECK_H_
#define LIPEMBED_LIPNET_NETWORK_GRAD_CHECK_H_

#include "diffgraph/grad-check.h"
#include "lipnet/network.h"

namespace lipembed {

struct NetworkGradCheckOptions {
  Backend backend = Backend::kLstm;
  std::size_t batch_size = 3;
  /// Train mode exercises batch statistics and (fixed) dropout masks.
  bool train_mode = true;
  uint64 seed = 17;
  GradCheckOptions check;
};

/// Finite-difference check of the cross-entropy gradient of every parameter
/// on the chosen backend's path, on a random seeded batch.  One report group
/// per parameter, in parameter order.
GradCheckReport CheckNetworkGradients(const NetworkConfig &config,
                                      const NetworkGradCheckOptions &opts);

}  // namespace lipembed

#endif  // LIPEMBED_LIPNET_NETWORK_GRAD_CHECK_H_
