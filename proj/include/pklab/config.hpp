#pragma once

#include <string>

#include "pklab/errors.hpp"

namespace pklab {

enum class OutputFormat { json, csv };

// Process-wide knobs. Set once at startup (CLI flags / test setup), read
// everywhere. Not protected by a lock: set before spawning workers.
struct Config {
    int precision_bits = 256;   // mantissa bits for the extended-precision backend
    double default_tol = 1e-10; // default target tolerance for tables and quadratures
    int threads = 0;            // 0 = hardware concurrency
    std::string cache_dir;      // empty = no on-disk coefficient cache
    OutputFormat output_format = OutputFormat::json;

    void validate() const {
        if (precision_bits < 64)
            throw DomainError("precision_bits must be >= 64");
        if (!(default_tol > 0.0) || default_tol > 1e-4)
            throw DomainError("default_tol must lie in (0, 1e-4]");
        if (threads < 0)
            throw DomainError("threads must be >= 0");
    }
};

const Config& config();
void set_config(const Config& cfg);

// Resolved worker count (>= 1).
int effective_threads();

}  // namespace pklab
