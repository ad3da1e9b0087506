#ifndef SCMP_CHECKPOINT_HPP
#define SCMP_CHECKPOINT_HPP

#include <string>

#include "scmp/model.hpp"

namespace scmp {

// Binary checkpoint: magic "SCMP", format version, variant and dims, then
// per-parameter records (name, shape, f64 values) followed by Adam moments
// and the normalization running moments. Round-trips bit-exactly.
void save_checkpoint(const CompatibilityModel& model, const std::string& path);
CompatibilityModel load_checkpoint(const std::string& path);

}  // namespace scmp

#endif
