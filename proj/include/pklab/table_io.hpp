#pragma once

#include <filesystem>
#include <string>

#include "pklab/poincare.hpp"

namespace pklab {

// Line-oriented, bit-exact coefficient cache:
//   header:   pklab-table 1 <k> <m> <tol> <precision_bits>
//   entries:  <n> <sign> <log_mag> <tail_bound>
// dense entries for n = 1..size in order, then the n = m norm entry when m
// lies past the dense range.  Doubles are C99 hexadecimal floating point
// (%a), so write -> read -> write reproduces the file byte for byte and the
// values exactly.  Partial tables (failed entries) are not cacheable.
std::string table_to_text(const CoefficientTable& table);
CoefficientTable table_from_text(const std::string& text);

void write_table_file(const std::filesystem::path& path, const CoefficientTable& table);
CoefficientTable read_table_file(const std::filesystem::path& path);

// deterministic cache location for (params, n_max, tol) under dir
std::filesystem::path table_cache_path(const std::filesystem::path& dir,
                                       const ModularParams& params, long n_max, double tol);

}  // namespace pklab
