// lipnet/checkpoint.h

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

#ifndef LIPEMBED_LIPNET_CHECKPOINT_H_
#define LIPEMBED_LIPNET_CHECKPOINT_H_

// A checkpoint is a JSON manifest plus a flat payload of little-endian
// float32 values.  The manifest lists the format version, the network
// configuration and, in order, every parameter and buffer with its shape and
// byte offset into the payload.  The payload sits next to the manifest with
// the extension ".bin".

#include <memory>
#include <string>

#include "json.hpp"
#include "lipnet/network.h"

namespace lipembed {

constexpr int kCheckpointVersion = 1;

nlohmann::json ConfigToJson(const NetworkConfig &config);
/// Keys absent from j keep the toy defaults.
NetworkConfig ConfigFromJson(const nlohmann::json &j);

void SaveCheckpoint(const Network &net, const std::string &manifest_path);
std::unique_ptr<Network> LoadCheckpoint(const std::string &manifest_path);

}  // namespace lipembed

#endif  // LIPEMBED_LIPNET_CHECKPOINT_H_
