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

#include "exedit/wire.hpp"

#include <bit>
#include <cstring>

#include "exedit/errors.hpp"
#include "exedit/image_io.hpp"

static_assert(std::endian::native == std::endian::little,
              "wire format assumes a little-endian host");

namespace exedit::wire {

using nlohmann::json;

const json& field(const json& j, const char* key) {
  if (!j.is_object()) throw ServiceError("malformed response: not an object", false);
  auto it = j.find(key);
  if (it == j.end()) {
    throw ServiceError(std::string("malformed response: missing ") + key,
                       false);
  }
  return *it;
}

json encode_tensor(const Eigen::MatrixXd& m, const std::string& dtype) {
  Bytes bytes;
  if (dtype == "f64") {
    bytes.resize(static_cast<size_t>(m.size()) * sizeof(double));
    size_t off = 0;
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const double v = m(r, c);
        std::memcpy(bytes.data() + off, &v, sizeof v);
        off += sizeof v;
      }
  } else if (dtype == "f32") {
    bytes.resize(static_cast<size_t>(m.size()) * sizeof(float));
    size_t off = 0;
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const float v = static_cast<float>(m(r, c));
        std::memcpy(bytes.data() + off, &v, sizeof v);
        off += sizeof v;
      }
  } else {
    throw ConfigError("unknown tensor dtype " + dtype);
  }
  return {{"rows", m.rows()},
          {"cols", m.cols()},
          {"dtype", dtype},
          {"data_b64", base64_encode(bytes)}};
}

Eigen::MatrixXd decode_tensor(const json& j) {
  try {
    const auto rows = field(j, "rows").get<Eigen::Index>();
    const auto cols = field(j, "cols").get<Eigen::Index>();
    const auto dtype = field(j, "dtype").get<std::string>();
    const Bytes bytes = base64_decode(field(j, "data_b64").get<std::string>());
    if (rows < 0 || cols < 0) throw ServiceError("negative tensor shape", false);
    Eigen::MatrixXd m(rows, cols);
    const size_t n = static_cast<size_t>(rows * cols);
    size_t off = 0;
    if (dtype == "f64") {
      if (bytes.size() != n * sizeof(double)) {
        throw ServiceError("tensor payload size mismatch", false);
      }
      for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) {
          double v;
          std::memcpy(&v, bytes.data() + off, sizeof v);
          off += sizeof v;
          m(r, c) = v;
        }
    } else if (dtype == "f32") {
      if (bytes.size() != n * sizeof(float)) {
        throw ServiceError("tensor payload size mismatch", false);
      }
      for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) {
          float v;
          std::memcpy(&v, bytes.data() + off, sizeof v);
          off += sizeof v;
          m(r, c) = v;
        }
    } else {
      throw ServiceError("unknown tensor dtype " + dtype, false);
    }
    return m;
  } catch (const json::exception& e) {
    throw ServiceError(std::string("malformed tensor: ") + e.what(), false);
  }
}

json encode_vector(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd decode_vector(const json& j) {
  if (!j.is_array()) throw ServiceError("malformed vector", false);
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ServiceError("malformed vector", false);
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

std::string encode_image(const Image8& img) {
  return base64_encode(encode_png(img));
}

Image8 decode_image(const std::string& b64) {
  return exedit::decode_image(base64_decode(b64));
}

json encode_catalog(const LayerCatalog& catalog) {
  json out = json::array();
  for (const auto& l : catalog)
    out.push_back({{"position", l.position},
                   {"kind", to_string(l.kind)},
                   {"kind_index", l.kind_index},
                   {"name", l.name}});
  return out;
}

LayerCatalog decode_catalog(const json& j) {
  if (!j.is_array()) throw ServiceError("malformed catalog", false);
  LayerCatalog out;
  try {
    for (const auto& e : j) {
      LayerInfo l;
      l.position = field(e, "position").get<int>();
      const auto kind = field(e, "kind").get<std::string>();
      if (kind == "residual-up") {
        l.kind = LayerKind::kResidualUp;
      } else if (kind == "self-attention") {
        l.kind = LayerKind::kSelfAttention;
      } else {
        throw ServiceError("unknown layer kind " + kind, false);
      }
      l.kind_index = field(e, "kind_index").get<int>();
      l.name = field(e, "name").get<std::string>();
      out.push_back(std::move(l));
    }
  } catch (const json::exception& e) {
    throw ServiceError(std::string("malformed catalog: ") + e.what(), false);
  }
  return out;
}

json encode_schedule(const ScheduleParams& p) {
  return {{"kind", p.kind},
          {"train_steps", p.train_steps},
          {"beta_start", p.beta_start},
          {"beta_end", p.beta_end}};
}

ScheduleParams decode_schedule(const json& j) {
  try {
    ScheduleParams p;
    p.kind = field(j, "kind").get<std::string>();
    p.train_steps = field(j, "train_steps").get<int>();
    p.beta_start = field(j, "beta_start").get<double>();
    p.beta_end = field(j, "beta_end").get<double>();
    return p;
  } catch (const json::exception& e) {
    throw ServiceError(std::string("malformed schedule: ") + e.what(), false);
  }
}

}  // namespace exedit::wire
