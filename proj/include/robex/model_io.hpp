#ifndef ROBEX_MODEL_IO_HPP
#define ROBEX_MODEL_IO_HPP

#include <string>

#include "robex/network.hpp"

namespace robex {

/// Versioned text format; decimal values carry 17 significant digits so that
/// load(save(net)) reproduces the stored doubles exactly.
void save_model(const Network& net, const std::string& path);
Network load_model(const std::string& path);

/// snprintf("%.17g")-style formatting used for every real emitted to disk:
/// locale-independent, 17 significant digits.
std::string format_real(double v);

/// Atomically writes `content` (temp file + rename).
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace robex

#endif
