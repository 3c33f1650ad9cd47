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

#include <filesystem>

#include "svsep/training.hpp"

namespace svsep {

/// Checkpoint container:
///
///   "SVSEPCKP", u32 version, u64 header size, JSON header, float32 tensors
///
/// The header holds the stage, seed, STFT config, network geometry, epoch
/// counters, loss history and a directory of tensors (name and shape) in
/// file order: best/*, current/*, then adam_m/* and adam_v/* once the
/// optimizer has stepped. Tensor data is little-endian and row-major.
/// Reloading reproduces the checkpoint exactly.
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);

/// Throws IoError if unreadable, FormatError for a damaged file and
/// UnsupportedFormat for an unknown version.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace svsep
