// tools/cleanadapt.cpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cleanadapt/experiment.hpp"

namespace {

using namespace cleanadapt;

// Exit codes: 0 success, 2 usage error, 10 + ErrorCode for library errors,
// 1 for anything else.
constexpr int kUsageExit = 2;

std::string Fixed(const std::optional<double> &v) {
  return v ? FormatDouble(*v) : std::string("n/a");
}

void ApplyThreadLimit() {
  if (const char *env = std::getenv("CLEANADAPT_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n < 1) Fail(ErrorCode::kInvalidArgument, "CLEANADAPT_THREADS must be a positive integer");
    WorkerThreads() = static_cast<unsigned>(n);
  }
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Source-free domain adaptation by small-loss pseudo-label selection"};
  app.require_subcommand(1);
  std::string config_path, out_dir = "out";
  std::optional<std::uint64_t> seed;
  auto add_common = [&](CLI::App *sub) {
    sub->add_option("--config", config_path, "key=value experiment config")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed, "overrides the config seed");
  };
  auto *gen = app.add_subcommand("gen-data", "generate a synthetic source/target pair");
  auto *pre = app.add_subcommand("pretrain", "train the source-only model");
  auto *adapt = app.add_subcommand("adapt", "adapt a source checkpoint to the target split");
  auto *sweep = app.add_subcommand("sweep-tau", "final accuracy for every keep-rate in tau_list");
  auto *retr = app.add_subcommand("eval-retrieval", "target-to-source retrieval recall at k");
  for (auto *sub : {gen, pre, adapt, sweep, retr}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e) == 0 ? 0 : kUsageExit;
  }

  try {
    ApplyThreadLimit();
    ConfigMap cfg = ConfigMap::Load(config_path);
    if (seed) cfg.Set("seed", std::to_string(*seed));
    const std::filesystem::path out(out_dir);

    if (*gen) {
      for (const auto &line : CmdGenData(cfg, out)) std::cout << line << '\n';
    } else if (*pre) {
      const auto s = CmdPretrain(cfg, out);
      std::cout << "source_accuracy=" << FormatDouble(s.source_accuracy) << '\n';
    } else if (*adapt) {
      const auto s = CmdAdapt(cfg, out);
      std::cout << "mode=" << s.mode << " source_only_acc=" << Fixed(s.source_only_acc)
                << " adapted_acc=" << Fixed(s.adapted_acc) << " gain=" << Fixed(s.gain) << '\n';
    } else if (*sweep) {
      for (const auto &row : CmdSweepTau(cfg, out))
        std::cout << "tau=" << FormatDouble(row.tau) << " adapted_acc=" << Fixed(row.adapted_acc)
                  << " gain=" << Fixed(row.gain) << '\n';
    } else if (*retr) {
      const auto r = CmdEvalRetrieval(cfg, out);
      for (const auto &[k, v] : r.recall_at) std::cout << "R@" << k << '=' << FormatDouble(v) << '\n';
    }
  } catch (const Error &e) {
    std::cerr << "error (" << ErrorCodeName(e.code()) << "): " << e.what() << '\n';
    return 10 + static_cast<int>(e.code());
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
