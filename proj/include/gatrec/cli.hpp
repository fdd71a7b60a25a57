/*
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef GATREC_CLI_HPP_
#define GATREC_CLI_HPP_

#include <string>
#include <vector>

namespace gatrec {

/// Entry point behind the `gatrec` binary. `args` excludes the program
/// name. Subcommands: ingest, profile, embed, train, evaluate, recommend,
/// pipeline. Returns 0 on success, 1 on config/runtime failure (violations
/// listed on stderr), 2 on usage errors.
int run_command(const std::vector<std::string>& args);

int run_command(int argc, const char* const* argv);

}  // namespace gatrec

#endif  // GATREC_CLI_HPP_
