// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace lorentz_eikonal {

// 17 significant digits: binary64 values round-trip exactly.
std::string format_double(double v);

void write_csv_row(std::ostream& os, const std::vector<double>& values);
void write_csv_header(std::ostream& os, const std::vector<std::string>& names);

// 64-bit FNV-1a, hex encoded; used for configuration digests.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace lorentz_eikonal
