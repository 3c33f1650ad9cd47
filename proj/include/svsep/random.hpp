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
#include <initializer_list>
#include <random>
#include <string_view>

namespace svsep {

/// Derives an independent generator from the run seed, a stream name
/// ("split", "shuffle", "dropout", "fixture", ...) and optional indices.
/// Identical arguments always give identical sequences.
std::mt19937_64 make_stream(std::uint64_t seed, std::string_view name,
                            std::initializer_list<std::uint64_t> indices = {});

}  // namespace svsep
