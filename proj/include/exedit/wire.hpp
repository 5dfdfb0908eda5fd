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

#pragma once

#include <json.hpp>

#include <Eigen/Core>

#include <string>

#include "exedit/backend.hpp"
#include "exedit/image.hpp"
#include "exedit/schedule.hpp"

// JSON encodings shared by the HTTP clients and the services they talk to.
// See docs/protocol.md.

namespace exedit::wire {

// {"rows", "cols", "dtype": "f64"|"f32", "data_b64"}: row-major,
// little-endian.
nlohmann::json encode_tensor(const Eigen::MatrixXd& m,
                             const std::string& dtype = "f64");
Eigen::MatrixXd decode_tensor(const nlohmann::json& j);

nlohmann::json encode_vector(const Eigen::VectorXd& v);
Eigen::VectorXd decode_vector(const nlohmann::json& j);

// Base64 PNG.
std::string encode_image(const Image8& img);
Image8 decode_image(const std::string& b64);

nlohmann::json encode_catalog(const LayerCatalog& catalog);
LayerCatalog decode_catalog(const nlohmann::json& j);

nlohmann::json encode_schedule(const ScheduleParams& p);
ScheduleParams decode_schedule(const nlohmann::json& j);

// Field access that reports the missing or mistyped key.
const nlohmann::json& field(const nlohmann::json& j, const char* key);

}  // namespace exedit::wire
