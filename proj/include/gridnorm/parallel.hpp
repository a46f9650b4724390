#pragma once

namespace gridnorm {

// Force single-threaded execution (bit-reproducible output ordering,
// timing-insensitive CI runs). Off by default.
void set_serial_execution(bool serial);
bool serial_execution();

} // namespace gridnorm
