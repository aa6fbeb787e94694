// synthgen/videos.cc

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

#include "synthgen/videos.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "base/io.h"

namespace lipembed {

namespace {

constexpr uint32 kClipVersion = 1;
const char kClipMagic[] = "LPCL";
constexpr int kBlobsPerTemplate = 3;

std::mt19937_64 DerivedRng(uint64 seed, uint64 a, uint64 b) {
  std::seed_seq seq{uint32(seed), uint32(seed >> 32), uint32(a), uint32(b)};
  return std::mt19937_64(seq);
}

Array MakeTemplate(std::size_t h, std::size_t w, std::mt19937_64 *rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Array img({h, w});
  for (int k = 0; k < kBlobsPerTemplate; k++) {
    const double cy = (0.2 + 0.6 * u(*rng)) * h, cx = (0.2 + 0.6 * u(*rng)) * w;
    const double sy = (0.08 + 0.12 * u(*rng)) * h, sx = (0.08 + 0.12 * u(*rng)) * w;
    const double amp = 0.4 + 0.6 * u(*rng);
    for (std::size_t y = 0; y < h; y++)
      for (std::size_t x = 0; x < w; x++) {
        const double dy = (y - cy) / sy, dx = (x - cx) / sx;
        img[y * w + x] += amp * std::exp(-0.5 * (dy * dy + dx * dx));
      }
  }
  for (double &v : img.values()) v = std::min(v, 1.0);
  return img;
}

// Frame at fractional position pos in [0,1] along a template sequence.
void Interpolate(const std::vector<Array> &inventory,
                 const std::vector<std::size_t> &sequence, double pos,
                 double *out) {
  const double u = pos * double(sequence.size() - 1);
  const std::size_t lo = std::min<std::size_t>(std::size_t(u), sequence.size() - 1);
  const std::size_t hi = std::min(lo + 1, sequence.size() - 1);
  const double a = u - double(lo);
  const Array &p = inventory[sequence[lo]], &q = inventory[sequence[hi]];
  for (std::size_t i = 0; i < p.size(); i++) out[i] = (1.0 - a) * p[i] + a * q[i];
}

double Position(std::size_t i, std::size_t n) {
  return n <= 1 ? 0.0 : double(i) / double(n - 1);
}

}  // namespace

void VideoSpec::Validate() const {
  if (num_classes == 0 || instances_per_class == 0)
    LE_ERR << "video spec needs positive class and instance counts";
  if (frames == 0 || height == 0 || width == 0)
    LE_ERR << "video spec needs positive frame geometry";
  if (min_boundary == 0 || min_boundary > max_boundary || max_boundary > frames)
    LE_ERR << "word length range [" << min_boundary << "," << max_boundary
           << "] must satisfy 1 <= min <= max <= T=" << frames;
  if (templates_per_class == 0 || inventory_size < 2)
    LE_ERR << "video spec needs templates per class >= 1 and inventory >= 2";
  if (!(instance_noise >= 0.0) || !(context_noise >= 0.0))
    LE_ERR << "noise levels must be non-negative";
}

std::vector<VideoClip> GenerateVideos(const VideoSpec &spec) {
  spec.Validate();
  std::mt19937_64 rng(spec.seed);
  std::vector<Array> inventory;
  for (std::size_t i = 0; i < spec.inventory_size; i++)
    inventory.push_back(MakeTemplate(spec.height, spec.width, &rng));

  // Class sequences: no immediate repeats, no two classes alike.
  std::uniform_int_distribution<std::size_t> pick(0, spec.inventory_size - 1);
  std::vector<std::vector<std::size_t>> sequences;
  for (std::size_t c = 0; c < spec.num_classes; c++) {
    std::vector<std::size_t> seq;
    for (int attempt = 0;; attempt++) {
      seq.clear();
      while (seq.size() < spec.templates_per_class) {
        const std::size_t t = pick(rng);
        if (seq.empty() || seq.back() != t) seq.push_back(t);
      }
      if (std::find(sequences.begin(), sequences.end(), seq) == sequences.end())
        break;
      if (attempt > 1000)
        LE_ERR << "cannot draw " << spec.num_classes << " distinct class "
               << "sequences from " << spec.inventory_size << " templates";
    }
    sequences.push_back(seq);
  }

  const std::size_t t_len = spec.frames, frame = spec.height * spec.width;
  std::vector<VideoClip> clips;
  clips.reserve(spec.num_classes * spec.instances_per_class);
  for (std::size_t c = 0; c < spec.num_classes; c++) {
    for (std::size_t n = 0; n < spec.instances_per_class; n++) {
      std::mt19937_64 r = DerivedRng(spec.seed, c, n);
      std::uniform_int_distribution<std::size_t> len_dist(spec.min_boundary,
                                                          spec.max_boundary);
      const std::size_t len = len_dist(r);
      std::uniform_int_distribution<std::size_t> start_dist(0, t_len - len);
      const std::size_t start = start_dist(r);
      // Left and right context each show a whole word of another class.
      std::size_t context[2] = {c, c};
      if (spec.num_classes > 1) {
        std::uniform_int_distribution<std::size_t> d(0, spec.num_classes - 2);
        for (std::size_t &k : context) {
          k = d(r);
          if (k >= c) k++;
        }
      }
      std::normal_distribution<double> instance(0.0, 1.0);

      VideoClip clip;
      char id[64];
      std::snprintf(id, sizeof(id), "w%03zu-%04zu", c, n);
      clip.id = id;
      clip.label = c;
      clip.boundary_begin = start;
      clip.boundary_end = start + len;
      clip.frames = Array({t_len, spec.height, spec.width});
      for (std::size_t t = 0; t < t_len; t++) {
        double *px = clip.frames.data() + t * frame;
        const bool inside = t >= start && t < start + len;
        if (inside)
          Interpolate(inventory, sequences[c], Position(t - start, len), px);
        else if (t < start)
          Interpolate(inventory, sequences[context[0]], Position(t, start), px);
        else
          Interpolate(inventory, sequences[context[1]],
                      Position(t - start - len, t_len - start - len), px);
        const double extra = inside ? 0.0 : spec.context_noise;
        for (std::size_t i = 0; i < frame; i++) {
          double v = px[i] + spec.instance_noise * instance(r);
          if (extra > 0.0) v += extra * instance(r);
          px[i] = std::clamp(v, 0.0, 1.0);
        }
      }
      clip.frames.RoundToFloat();
      clips.push_back(std::move(clip));
    }
  }
  return clips;
}

void PartitionByLabel(const std::vector<VideoClip> &clips, std::size_t num_seen,
                      std::vector<VideoClip> *seen,
                      std::vector<VideoClip> *unseen) {
  seen->clear();
  unseen->clear();
  for (const VideoClip &c : clips) (c.label < num_seen ? seen : unseen)->push_back(c);
}

std::string EncodeClip(const VideoClip &clip) {
  clip.Validate();
  std::string out(kClipMagic, 4);
  AppendU32(&out, kClipVersion);
  AppendU32(&out, uint32(clip.frames.dim(0)));
  AppendU32(&out, uint32(clip.frames.dim(1)));
  AppendU32(&out, uint32(clip.frames.dim(2)));
  AppendU32(&out, uint32(clip.boundary_begin));
  AppendU32(&out, uint32(clip.boundary_end));
  AppendI32(&out, int32(clip.label));
  for (double v : clip.frames.values()) AppendF32(&out, float(v));
  return out;
}

VideoClip DecodeClip(const std::string &bytes, const std::string &id) {
  if (bytes.size() < 32 || bytes.compare(0, 4, kClipMagic) != 0)
    LE_ERR << "clip " << id << " is not a clip file";
  if (ReadU32(bytes, 4) != kClipVersion)
    LE_ERR << "clip " << id << " has unsupported version " << ReadU32(bytes, 4);
  VideoClip clip;
  clip.id = id;
  const std::size_t t = ReadU32(bytes, 8), h = ReadU32(bytes, 12),
                    w = ReadU32(bytes, 16);
  clip.boundary_begin = ReadU32(bytes, 20);
  clip.boundary_end = ReadU32(bytes, 24);
  const int32 label = ReadI32(bytes, 28);
  if (label < 0) LE_ERR << "clip " << id << " has negative label " << label;
  clip.label = std::size_t(label);
  const std::size_t n = t * h * w;
  if (bytes.size() != 32 + 4 * n)
    LE_ERR << "clip " << id << " has " << bytes.size() << " bytes, expected "
           << 32 + 4 * n;
  clip.frames = Array({t, h, w});
  for (std::size_t i = 0; i < n; i++) clip.frames[i] = ReadF32(bytes, 32 + 4 * i);
  clip.Validate();
  return clip;
}

void WriteClip(const VideoClip &clip, const std::string &path) {
  WriteFileAtomic(path, EncodeClip(clip));
}

VideoClip ReadClip(const std::string &path, const std::string &id) {
  return DecodeClip(ReadFile(path), id);
}

}  // namespace lipembed
