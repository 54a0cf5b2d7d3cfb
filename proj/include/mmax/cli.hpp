#pragma once

#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "mmax/config.hpp"
#include "mmax/model.hpp"

namespace mmax {

// Exit codes shared by every subcommand.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,
  kExitData = 2,
  kExitNumeric = 3,
  kExitInternal = 4,
};

// Runs the mmax command line (args excludes the program name). Reports go
// to `out` as TSV, diagnostics and the config echo to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Called after analytic gradients are computed and before they are compared;
// lets tests corrupt a backward pass on purpose.
using GradientHook = std::function<void(Model&, Task)>;

inline constexpr double kGradCheckTolerance = 1e-4;
inline constexpr double kGradCheckStep = 1e-5;

struct GradCheckOutcome {
  bool passed = true;
  double max_rel_error = 0.0;
  std::vector<std::string> failing;  // "task:parameter"
};

// Seeded toy model and 2-pair batch per task type (sts, entailment,
// paraphrase), dropout off; checks every parameter. Prints one TSV row per
// parameter plus a summary row.
GradCheckOutcome run_gradcheck(const RunConfig& cfg, std::ostream& out, const GradientHook& hook = {});

// The two-pair batch gradcheck uses for a task.
PairDataset gradcheck_batch(const FusedLexicon& lex, Task task, const ScoreSpec& score, std::uint64_t seed);

}  // namespace mmax
