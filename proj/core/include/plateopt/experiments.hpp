#pragma once

#include <functional>
#include <iosfwd>
#include <string>

#include <Eigen/Core>

#include "plateopt/config.hpp"
#include "plateopt/errors.hpp"
#include "plateopt/mesh2d.hpp"

namespace plateopt {

// Force density of a load case on a 2D domain: "uniform" is (0, 0, load)
// everywhere, "corner" is the two-corner benchmark (e2 = +-50, e3 = load on
// the squares of side 0.1 at the free corners), "centered" is (0, 0, load) on
// the square of side 0.1 around the domain center.
std::function<void(const Eigen::Vector2d&, double*)> load_case_force(const std::string& load_case, double load,
                                                                    const TriMesh& mesh);

// Runs one experiment and writes its tables into config.output_dir together
// with the resolved config (config.txt). Progress goes to `log`. Solver and
// configuration failures propagate as plateopt::Error.
void run_experiment(const ExperimentConfig& config, std::ostream& log);

// {"error": kind, "message": ..., "exit_code": n[, "line": n]} on one line.
std::string error_record_json(const Error& error);

}  // namespace plateopt
