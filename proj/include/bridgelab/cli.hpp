#ifndef BRIDGELAB_CLI_HPP
#define BRIDGELAB_CLI_HPP

#include <string>
#include <vector>

#include "bridgelab/trainer.hpp"

namespace bridgelab {

// Stable exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitRuntimeError = 3;

// Root directory for run outputs: $BRIDGELAB_RUNS if set, else "runs".
std::string runs_root();

// Metric evaluation shared by `eval` and `ablate`: translates up to `limit`
// held-out pairs and computes the task's metric pairing (toy_shapes: IoU +
// 1-NNA; toy_sr: PSNR + SSIM; linear: PSNR).
Json evaluate_trainer(Trainer& trainer, const PairedDataset& data, int limit,
                      const SamplerConfig& scfg);

// Full command-line dispatch (args excludes argv[0]). Returns an exit code
// and never throws; diagnostics go to stderr as single lines.
int run_cli(const std::vector<std::string>& args);

}  // namespace bridgelab

#endif
