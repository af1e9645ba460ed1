#pragma once

#include <string>
#include <vector>

namespace gbert::verify {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct SelftestOptions {
    /// Flip one byte of the serialized checkpoint before reloading it.
    bool corrupt_checkpoint = false;
};

/// Fast verification suite: gradient check on a tiny config, CRF against
/// path enumeration, GLU identities, tree conversion of the reference
/// sentence, masking statistics and checkpoint round trip.
std::vector<CheckResult> run_selftest(const SelftestOptions& options = {});

}  // namespace gbert::verify
