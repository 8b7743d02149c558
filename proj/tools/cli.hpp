// Copyright 2026 The crdr Authors. All Rights Reserved.
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

#ifndef CRDR_TOOLS_CLI_HPP_
#define CRDR_TOOLS_CLI_HPP_

#include <ostream>
#include <string>
#include <vector>

namespace crdr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitDomain = 3;
inline constexpr int kExitFormat = 4;

// Environment variable naming the directory that holds model.ckpt when
// --ckpt is not given.
inline constexpr const char* kCheckpointDirEnv = "CRDR_CKPT_DIR";

// args excludes the program name. Diagnostics go to err.
int RunCommand(const std::vector<std::string>& args, std::ostream& out,
               std::ostream& err);

}  // namespace crdr::cli

#endif  // CRDR_TOOLS_CLI_HPP_
