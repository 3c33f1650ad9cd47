// Copyright 2026 The svsep Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
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

namespace svsep::cli {

/// 8-bit grayscale PNG, row-major, `width` x `height`.
void write_gray_png(const std::filesystem::path& path, std::span<const std::uint8_t> pixels, std::size_t width,
                    std::size_t height);

}  // namespace svsep::cli
