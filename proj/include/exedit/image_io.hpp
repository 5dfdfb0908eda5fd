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

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "exedit/image.hpp"

namespace exedit {

using Bytes = std::vector<std::uint8_t>;

// PNG or JPEG (sniffed from the magic bytes) into 8-bit RGB. Alpha is
// composited over black by libpng; grayscale is expanded.
Image8 decode_image(std::span<const std::uint8_t> data);
Image8 read_image(const std::filesystem::path& path);

// 8-bit RGB PNG. Output bytes depend only on the pixels.
Bytes encode_png(const Image8& image);
void write_png(const std::filesystem::path& path, const Image8& image);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path,
                std::span<const std::uint8_t> data);
void write_text(const std::filesystem::path& path, std::string_view text);

std::string sha256_hex(std::span<const std::uint8_t> data);
inline std::string sha256_hex(std::string_view text) {
  return sha256_hex(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string base64_encode(std::span<const std::uint8_t> data);
Bytes base64_decode(std::string_view text);

}  // namespace exedit
