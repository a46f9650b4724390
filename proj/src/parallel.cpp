#include "gridnorm/parallel.hpp"

#include <atomic>

namespace gridnorm {

namespace {
std::atomic<bool> g_serial{false};
}

void set_serial_execution(bool serial) { g_serial.store(serial); }

bool serial_execution() { return g_serial.load(); }

} // namespace gridnorm
