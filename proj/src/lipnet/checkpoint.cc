// lipnet/checkpoint.cc

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

#include "lipnet/checkpoint.h"

#include <filesystem>

#include "base/io.h"

namespace lipembed {

using nlohmann::json;

json ConfigToJson(const NetworkConfig &c) {
  json j;
  j["frames"] = c.frames;
  j["height"] = c.height;
  j["width"] = c.width;
  j["stem_channels"] = c.stem_channels;
  j["stem_kernel"] = c.stem_kernel;
  j["stage_channels"] = c.stage_channels;
  j["stage_blocks"] = c.stage_blocks;
  j["feature_size"] = c.feature_size;
  j["lstm_layers"] = c.lstm_layers;
  j["use_word_boundaries"] = c.use_word_boundaries;
  j["backend_dropout"] = c.backend_dropout;
  j["embedding_dropout"] = c.embedding_dropout;
  j["use_embedding_batchnorm"] = c.use_embedding_batchnorm;
  j["dropout_before_batchnorm"] = c.dropout_before_batchnorm;
  j["pooling"] = c.pooling == PoolMode::kLast ? "last" : "average";
  j["embedding_size"] = c.embedding_size;
  j["num_classes"] = c.num_classes;
  j["temporal_conv_channels"] = c.temporal_conv_channels;
  return j;
}

NetworkConfig ConfigFromJson(const json &j) {
  NetworkConfig c;
  try {
    auto get = [&](const char *key, auto *field) {
      if (j.contains(key)) j.at(key).get_to(*field);
    };
    get("frames", &c.frames);
    get("height", &c.height);
    get("width", &c.width);
    get("stem_channels", &c.stem_channels);
    get("stem_kernel", &c.stem_kernel);
    get("stage_channels", &c.stage_channels);
    get("stage_blocks", &c.stage_blocks);
    get("feature_size", &c.feature_size);
    get("lstm_layers", &c.lstm_layers);
    get("use_word_boundaries", &c.use_word_boundaries);
    get("backend_dropout", &c.backend_dropout);
    get("embedding_dropout", &c.embedding_dropout);
    get("use_embedding_batchnorm", &c.use_embedding_batchnorm);
    get("dropout_before_batchnorm", &c.dropout_before_batchnorm);
    get("embedding_size", &c.embedding_size);
    get("num_classes", &c.num_classes);
    get("temporal_conv_channels", &c.temporal_conv_channels);
    if (j.contains("pooling")) {
      const std::string p = j.at("pooling").get<std::string>();
      if (p == "last") c.pooling = PoolMode::kLast;
      else if (p == "average") c.pooling = PoolMode::kAverage;
      else LE_ERR << "unknown pooling mode '" << p << "'";
    }
  } catch (const json::exception &e) {
    LE_ERR << "malformed network configuration: " << e.what();
  }
  c.Validate();
  return c;
}

namespace {

void AppendTensor(const std::string &name, const char *kind, const Array &a,
                  std::string *payload, json *tensors) {
  json t;
  t["name"] = name;
  t["kind"] = kind;
  t["shape"] = a.shape();
  t["offset"] = payload->size();
  for (std::size_t i = 0; i < a.size(); i++) AppendF32(payload, float(a[i]));
  tensors->push_back(t);
}

}  // namespace

void SaveCheckpoint(const Network &net, const std::string &manifest_path) {
  const ParamSet &ps = net.params();
  std::string payload;
  json tensors = json::array();
  for (const std::string &n : ps.param_names())
    AppendTensor(n, "param", ps.Param(n).value, &payload, &tensors);
  for (const std::string &n : ps.buffer_names())
    AppendTensor(n, "buffer", ps.Buffer(n), &payload, &tensors);

  const std::string payload_path = ReplaceExtension(manifest_path, ".bin");
  json m;
  m["format"] = "lipembed-checkpoint";
  m["version"] = kCheckpointVersion;
  m["config"] = ConfigToJson(net.config());
  m["payload"] = std::filesystem::path(payload_path).filename().string();
  m["payload_bytes"] = payload.size();
  m["tensors"] = tensors;
  WriteFileAtomic(payload_path, payload);
  WriteFileAtomic(manifest_path, m.dump(2) + "\n");
}

std::unique_ptr<Network> LoadCheckpoint(const std::string &manifest_path) {
  json m;
  try {
    m = json::parse(ReadFile(manifest_path));
  } catch (const json::exception &e) {
    LE_ERR << manifest_path << " is not valid JSON: " << e.what();
  }
  if (m.value("format", "") != "lipembed-checkpoint")
    LE_ERR << manifest_path << " is not a lipembed checkpoint manifest";
  if (m.value("version", -1) != kCheckpointVersion)
    LE_ERR << manifest_path << " has unsupported checkpoint version "
           << m.value("version", -1);
  auto net = std::make_unique<Network>(ConfigFromJson(m.at("config")), 0);
  const std::filesystem::path dir =
      std::filesystem::path(manifest_path).parent_path();
  const std::string payload =
      ReadFile((dir / m.at("payload").get<std::string>()).string());
  if (payload.size() != m.value("payload_bytes", std::size_t(0)))
    LE_ERR << "checkpoint payload is " << payload.size() << " bytes, manifest "
           << "says " << m.value("payload_bytes", std::size_t(0));

  ParamSet &ps = net->params();
  bool has_tcn = false;
  for (const json &t : m.at("tensors"))
    has_tcn = has_tcn || t.at("name").get<std::string>().rfind("tcn.", 0) == 0;
  if (has_tcn) net->AttachTemporalConvBackend(0);

  std::size_t num_params = 0, num_buffers = 0;
  for (const json &t : m.at("tensors")) {
    const std::string name = t.at("name").get<std::string>();
    const std::string kind = t.at("kind").get<std::string>();
    const Shape shape = t.at("shape").get<Shape>();
    std::size_t offset = t.at("offset").get<std::size_t>();
    Array *dst = nullptr;
    if (kind == "param" && ps.HasParam(name)) {
      dst = &ps.Param(name).value;
      num_params++;
    } else if (kind == "buffer" && ps.HasBuffer(name)) {
      dst = &ps.Buffer(name);
      num_buffers++;
    } else {
      LE_ERR << "checkpoint tensor " << name << " does not belong to this network";
    }
    if (dst->shape() != shape)
      LE_ERR << "checkpoint tensor " << name << " is " << ShapeString(shape)
             << ", network expects " << ShapeString(dst->shape());
    for (std::size_t i = 0; i < dst->size(); i++, offset += 4)
      (*dst)[i] = ReadF32(payload, offset);
    if (!dst->AllFinite()) LE_ERR << "checkpoint tensor " << name << " is not finite";
  }
  if (num_params != ps.param_names().size() ||
      num_buffers != ps.buffer_names().size())
    LE_ERR << "checkpoint is missing tensors: has " << num_params << "/"
           << ps.param_names().size() << " parameters and " << num_buffers
           << "/" << ps.buffer_names().size() << " buffers";
  return net;
}

}  // namespace lipembed
