// synthgen/videos.h

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

#ifndef LIPEMBED_SYNTHGEN_VIDEOS_H_
#define LIPEMBED_SYNTHGEN_VIDEOS_H_

// Toy "word" clips.  A global inventory of viseme templates (smooth blob
// images) is shared by all classes; each class owns a fixed sequence of
// templates.  Inside the word boundary a clip interpolates its class
// sequence; the frames before and after it each show a whole word of some
// other class, so the context is misleading unless the boundary is known.

#include <string>
#include <vector>

#include "lipnet/video-clip.h"

namespace lipembed {

struct VideoSpec {
  std::size_t num_classes = 10;
  std::size_t instances_per_class = 30;
  std::size_t frames = 9;
  std::size_t height = 24;
  std::size_t width = 24;
  /// Word length in frames is drawn uniformly from [min, max].
  std::size_t min_boundary = 3;
  std::size_t max_boundary = 6;
  std::size_t templates_per_class = 3;
  std::size_t inventory_size = 12;
  double instance_noise = 0.05;
  /// Extra pixel noise on frames outside the word.
  double context_noise = 0.0;
  uint64 seed = 17;

  void Validate() const;
};

/// All clips of all classes, grouped by class then instance.  Each clip is
/// generated from its own derived seed, so the result does not depend on
/// generation order.
std::vector<VideoClip> GenerateVideos(const VideoSpec &spec);

/// Splits by label into classes [0, num_seen) and the rest.
void PartitionByLabel(const std::vector<VideoClip> &clips, std::size_t num_seen,
                      std::vector<VideoClip> *seen, std::vector<VideoClip> *unseen);

/// Clip file: "LPCL", u32 version, u32 T, H, W, boundary begin, boundary end,
/// i32 label, then T*H*W float32 pixels; all little-endian.
std::string EncodeClip(const VideoClip &clip);
VideoClip DecodeClip(const std::string &bytes, const std::string &id);
void WriteClip(const VideoClip &clip, const std::string &path);
VideoClip ReadClip(const std::string &path, const std::string &id);

}  // namespace lipembed

#endif  // LIPEMBED_SYNTHGEN_VIDEOS_H_
