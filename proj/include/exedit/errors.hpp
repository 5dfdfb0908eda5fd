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

#include <exception>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace exedit {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

// A latent left the finite range (or the magnitude ceiling) during DDIM.
class NumericDivergenceError : public NumericError {
 public:
  NumericDivergenceError(const std::string& what, int step)
      : NumericError(what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

// The VLM answered, but the answer is unusable (e.g. empty).
class CaptureError : public Error {
 public:
  using Error::Error;
};

// Transport-level failure talking to an external service.
class ServiceError : public Error {
 public:
  ServiceError(const std::string& what, bool retriable)
      : Error(what), retriable_(retriable) {}
  bool retriable() const { return retriable_; }

 private:
  bool retriable_;
};

class ExternalModelError : public Error {
 public:
  using Error::Error;
};

class HookError : public Error {
 public:
  using Error::Error;
};

class InjectionShapeError : public HookError {
 public:
  InjectionShapeError(const std::string& what, int step, int layer)
      : HookError(what), step_(step), layer_(layer) {}
  int step() const { return step_; }
  int layer() const { return layer_; }

 private:
  int step_;
  int layer_;
};

class MetadataMismatchError : public HookError {
 public:
  using HookError::HookError;
};

class UnsupportedBackendError : public Error {
 public:
  using Error::Error;
};

class ScheduleError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class LoadError : public Error {
 public:
  using Error::Error;
};

class ImageDecodeError : public Error {
 public:
  using Error::Error;
};

class ManifestError : public Error {
 public:
  enum class Kind { kMissingFile, kSchema, kDanglingPath, kDuplicateId };

  ManifestError(Kind kind, std::string entry_id, const std::string& what)
      : Error(what), kind_(kind), entry_id_(std::move(entry_id)) {}
  Kind kind() const { return kind_; }
  const std::string& entry_id() const { return entry_id_; }

 private:
  Kind kind_;
  std::string entry_id_;
};

class MissingPredictionError : public Error {
 public:
  explicit MissingPredictionError(std::vector<std::string> ids)
      : Error(message(ids)), ids_(std::move(ids)) {}
  const std::vector<std::string>& ids() const { return ids_; }

 private:
  static std::string message(const std::vector<std::string>& ids) {
    std::string m = "missing predictions for:";
    for (const auto& id : ids) m += " " + id;
    return m;
  }
  std::vector<std::string> ids_;
};

// Wraps a failure with the pipeline stage that produced it. The original
// exception stays reachable through inner().
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& message,
             std::exception_ptr inner)
      : Error(stage + ": " + message),
        stage_(std::move(stage)),
        inner_(std::move(inner)) {}
  const std::string& stage() const { return stage_; }
  const std::exception_ptr& inner() const { return inner_; }
  [[noreturn]] void rethrow_inner() const { std::rethrow_exception(inner_); }

 private:
  std::string stage_;
  std::exception_ptr inner_;
};

// Runs fn and relabels any exception with the given stage. Nested stage
// labels are joined with '/'.
template <typename Fn>
decltype(auto) with_stage(const std::string& stage, Fn&& fn) {
  try {
    return std::forward<Fn>(fn)();
  } catch (const StageError& e) {
    throw StageError(stage + "/" + e.stage(),
                     std::string(e.what()).substr(e.stage().size() + 2),
                     e.inner());
  } catch (const std::exception& e) {
    throw StageError(stage, e.what(), std::current_exception());
  }
}

// Runs a model-client call, reporting any failure as ExternalModelError.
template <typename Fn>
decltype(auto) with_external_model(const std::string& model, Fn&& fn) {
  try {
    return std::forward<Fn>(fn)();
  } catch (const ExternalModelError&) {
    throw;
  } catch (const std::exception& e) {
    throw ExternalModelError(model + ": " + e.what());
  }
}

}  // namespace exedit
