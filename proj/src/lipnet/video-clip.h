// lipnet/video-clip.h

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

#ifndef LIPEMBED_LIPNET_VIDEO_CLIP_H_
#define LIPEMBED_LIPNET_VIDEO_CLIP_H_

#include <string>
#include <vector>

#include "base/embedding.h"
#include "diffgraph/array.h"

namespace lipembed {

/// A grayscale clip with its word label and the frame span of the word.
struct VideoClip {
  std::string id;
  Array frames;  // [T,H,W], values in [0,1]
  std::size_t label = 0;
  /// Frames [boundary_begin, boundary_end) lie inside the word.
  std::size_t boundary_begin = 0;
  std::size_t boundary_end = 0;

  std::size_t num_frames() const { return frames.empty() ? 0 : frames.dim(0); }
  /// Per-frame indicator: 1 inside the word, 0 outside.
  std::vector<double> BoundaryMask() const;
  /// Throws if the frames or the boundary are malformed.
  void Validate() const;
};

}  // namespace lipembed

#endif  // LIPEMBED_LIPNET_VIDEO_CLIP_H_
