#ifndef ROBEX_VERIFY_HPP
#define ROBEX_VERIFY_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace robex {

struct SuiteResult {
    std::string name;
    bool passed = false;
    std::string stats;  // one-line measured summary
};

/// Built-in oracle suites: estimator bias against the exact Hessian,
/// beta-interchange output identity, kink-sum reconstruction equivalence,
/// worst-case-bound soundness, and gradient-vs-finite-difference agreement.
/// Deterministic for a fixed seed.
std::vector<SuiteResult> run_verification(std::uint64_t seed);

}  // namespace robex

#endif
