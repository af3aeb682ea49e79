// Copyright 2026 The LIKA Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>
#include <vector>

namespace lika::cli {

/// Full command line including the program name. Returns the process exit
/// code: 0 success, 1 usage, 2 data, 3 numeric failure.
int parse_and_dispatch(const std::vector<std::string>& args);

int parse_and_dispatch(int argc, const char* const* argv);

}  // namespace lika::cli
