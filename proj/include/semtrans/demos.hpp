#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "semtrans/constructors.hpp"
#include "semtrans/exactness.hpp"
#include "semtrans/sem.hpp"

namespace semtrans::demos {

/// Bundled scenarios, runnable end to end via the CLI `demo` subcommand.
std::vector<std::string> names();

/// Materializes the scenario files under `out_dir` (source.json,
/// target.json, tau.json, omega.json, report.json, and dynamics.json where
/// applicable), runs the scenario's check, and prints a summary.
/// Returns 0 when the verdict is exact, 1 when checked-and-not-exact.
int run(const std::string& name, const std::string& out_dir,
        std::ostream& out);

// Scenario builders, also used by the test suites.

/// Two light bulbs and a light sensor: B1 = E1, B2 = E2,
/// L = or(B1, B2, E3), all noises Bernoulli(1/2), catalog
/// {null, do(B1=0), do(B2=0), do(B1=0,B2=0)}.
Sem lightbulbs();

/// Scenario whose omega sends the null intervention to an intervention:
/// every probe law matches but order preservation fails on
/// (null, do(X2=0)).
struct CheckScenario {
  Sem source;
  Sem target;
  Transformation tau;
  InterventionMap omega;
};
CheckScenario wrong1();

/// Scenario with omega(null) = null that still breaks order preservation
/// on (do(X2=0), do(X1=0,X2=0)).
CheckScenario wrong2();

/// Two-layer micro model with n = m = 2 and coupling [[1,3],[3,1]]
/// (column sums 4, so the macro equation is Z_hat = 4 W_hat + F_hat).
Sem micro_macro();

/// Two-coordinate linear process with transition [[0.5,0.2],[0.1,0.3]].
DynamicalSpec dynamics();

/// Three upstream variables with a downstream block hanging off X2 and X3;
/// dropping the block keeps the upstream model exact.
Sem fig3();

}  // namespace semtrans::demos
