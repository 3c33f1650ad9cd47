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

#include <string>
#include <vector>

namespace svsep::cli {

/// Runs one command line (args[0] is the program name). Returns the exit
/// status: 0 on success, 1 on a runtime error, 2 on a usage error, 3 when
/// training aborted on a non-finite loss.
int run(const std::vector<std::string>& args);

}  // namespace svsep::cli
