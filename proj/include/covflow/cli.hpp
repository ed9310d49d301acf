// Copyright 2026 The covflow Authors
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

#ifndef COVFLOW_CLI_HPP_
#define COVFLOW_CLI_HPP_

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "covflow/dynamics.hpp"
#include "covflow/optimizer.hpp"

namespace covflow {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // planning / numerical failure
inline constexpr int kExitUsage = 2;    // bad config, input or arguments

inline constexpr const char* kWorkersEnv = "COVFLOW_WORKERS";

std::vector<std::string> state_labels(const DynamicsModel& model);
std::vector<std::string> control_labels(const DynamicsModel& model);

// Columns: t, state components, control components. The final state has no
// control, so its control cells are empty.
void write_trajectory_csv(std::ostream& os, const DynamicsModel& model, const Trajectory& traj);

// Reads the state columns back. Throws InvalidArgument naming the row for
// malformed input and for files without any state rows.
Points read_trajectory_states(std::istream& is, const DynamicsModel& model);

// Entry point behind the covflow executable; args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace covflow

#endif  // COVFLOW_CLI_HPP_
