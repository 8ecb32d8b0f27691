#include "pklab/config.hpp"

#include <thread>

namespace pklab {

namespace {
Config g_config{};
}

const Config& config() { return g_config; }

void set_config(const Config& c) {
    c.validate();
    g_config = c;
}

int effective_threads() {
    if (g_config.threads > 0) return g_config.threads;
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

}  // namespace pklab
