// Copyright 2026 The exedit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "exedit/remote_backend.hpp"

#include "exedit/errors.hpp"
#include "exedit/wire.hpp"

namespace exedit {

using nlohmann::json;

RemoteBackend::RemoteBackend(const std::string& endpoint, double timeout_s,
                             std::string tensor_dtype)
    : http_(endpoint, timeout_s), dtype_(std::move(tensor_dtype)) {
  json info;
  try {
    info = http_.get("/info");
    id_ = wire::field(info, "id").get<std::string>();
    context_width_ = wire::field(info, "context_width").get<Eigen::Index>();
    resolution_ = wire::field(info, "resolution").get<Eigen::Index>();
    seed_ = info.value("seed", std::uint64_t{0});
    schedule_ = wire::decode_schedule(wire::field(info, "schedule"));
    catalog_ = wire::decode_catalog(wire::field(info, "catalog"));
    uncond_ = wire::decode_tensor(wire::field(info, "unconditional_context"));
  } catch (const ServiceError& e) {
    throw LoadError("remote backend " + endpoint + ": " + e.what());
  } catch (const json::exception& e) {
    throw LoadError("remote backend " + endpoint + ": malformed info: " +
                    e.what());
  }
}

namespace {

json encode_latent(const LatentState<double>& l, const std::string& dtype) {
  return {{"latent", wire::encode_tensor(l.z, dtype)},
          {"height", l.height},
          {"width", l.width}};
}

}  // namespace

LatentState<double> RemoteBackend::encode_image(const Image8& image) {
  if (image.width() != resolution_ || image.height() != resolution_) {
    throw DimensionError("remote encode: expected " +
                         std::to_string(resolution_) + "x" +
                         std::to_string(resolution_) + ", got " +
                         shape_string(image));
  }
  const json res =
      http_.post("/encode", {{"image", wire::encode_image(image)},
                             {"dtype", dtype_}});
  LatentState<double> out;
  out.z = wire::decode_tensor(wire::field(res, "latent"));
  out.height = wire::field(res, "height").get<Eigen::Index>();
  out.width = wire::field(res, "width").get<Eigen::Index>();
  out.t_index = 0;
  return out;
}

Image8 RemoteBackend::decode_latent(const LatentState<double>& latent) {
  const json res = http_.post("/decode", encode_latent(latent, dtype_));
  return wire::decode_image(wire::field(res, "image").get<std::string>());
}

Eigen::MatrixXd RemoteBackend::predict_noise(const LatentState<double>& latent,
                                             int timestep,
                                             const Eigen::MatrixXd& context,
                                             const StepHooks<double>& hooks) {
  json req = encode_latent(latent, dtype_);
  req["timestep"] = timestep;
  req["context"] = wire::encode_tensor(context, dtype_);
  req["dtype"] = dtype_;
  json h = {{"step", hooks.step},
            {"feature_layer", hooks.feature_layer},
            {"attn_layers", hooks.attn_layers},
            {"capture", hooks.capture != nullptr}};
  if (hooks.inject) {
    json inject = json::object();
    if (hooks.inject->feature) {
      inject["feature"] = wire::encode_tensor(*hooks.inject->feature, dtype_);
    }
    json qk = json::object();
    for (const auto& [layer, pair] : hooks.inject->qk) {
      qk[std::to_string(layer)] = {
          {"q", wire::encode_tensor(*pair.first, dtype_)},
          {"k", wire::encode_tensor(*pair.second, dtype_)}};
    }
    inject["qk"] = std::move(qk);
    h["inject"] = std::move(inject);
  }
  req["hooks"] = std::move(h);

  const json res = http_.post("/predict_noise", req);
  if (auto err = res.find("error"); err != res.end()) {
    // Server-side hook failures come back as structured errors.
    const std::string kind = res.value("error_kind", "");
    const std::string msg = err->get<std::string>();
    if (kind == "injection_shape") {
      throw InjectionShapeError(msg, res.value("step", hooks.step),
                                res.value("layer", -1));
    }
    if (kind == "dimension") throw DimensionError(msg);
    throw HookError(msg);
  }
  if (hooks.capture) {
    const json& cap = wire::field(res, "capture");
    if (auto f = cap.find("feature"); f != cap.end() && !f->is_null()) {
      hooks.capture->feature = wire::decode_tensor(*f);
    }
    if (auto a = cap.find("attention"); a != cap.end()) {
      for (const auto& [key, t] : a->items()) {
        hooks.capture->attention[std::stoi(key)] = {
            wire::decode_tensor(wire::field(t, "q")),
            wire::decode_tensor(wire::field(t, "k")),
            wire::decode_tensor(wire::field(t, "v"))};
      }
    }
  }
  return wire::decode_tensor(wire::field(res, "eps"));
}

}  // namespace exedit
