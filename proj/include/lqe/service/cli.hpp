#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lqe::service {

enum ExitCode : int { kExitOk = 0, kExitOperational = 1, kExitUsage = 2 };

/// The `lqe` command line. `args` excludes the program name.
///
///   lqe [--seed N] ingest <manifest> <store> [--format text|json]
///   lqe [--seed N] query <store|manifest> <query> [--now T] [--limit N] [--var k=v]...
///                        [--direction backward|forward] [--format json|table]
///   lqe [--seed N] eval <config> --generator echo|canned:<file>|endpoint:<name>
///                       [--split all|test|train:<fraction>] [--run-name NAME]
///   lqe [--seed N] annotate <config> --out <dataset>
///   lqe [--seed N] compare <before-metrics.json> <after-metrics.json> [--format markdown|json]
///   lqe [--seed N] serve <config> [--host H] [--port P]
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lqe::service
