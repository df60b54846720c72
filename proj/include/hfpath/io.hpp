#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "hfpath/model.hpp"

namespace hfpath {

// 17 significant digits: exact round trip for IEEE doubles.
std::string format_double(double v);

// Shortest round-trip form that always shows a decimal point ("1.0", "0.33333333333333331").
std::string format_display(double v);

// 64-bit FNV-1a; used to fingerprint config files in output headers.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

// Splits one CSV line on commas (no quoting; the formats here never need it).
std::vector<std::string> split_csv_line(const std::string& line);

// Reads non-comment, non-empty lines; the first one must equal `expected_header`.
std::vector<std::vector<std::string>> read_csv_rows(const std::string& path, const std::string& expected_header);

double parse_double(const std::string& text, const std::string& what);
std::uint64_t parse_u64(const std::string& text, const std::string& what);

// Fixture format: <path> with header fine_index,time,x,sigma and <jumps_path>
// with header time,size,kappa,sigma_left,sigma_right. n_coarse and horizon are
// passed explicitly since the point file alone fixes only n_coarse * m_fine.
void write_path_csv(const FineGridPath& path, const std::string& points_path, const std::string& jumps_path,
                    const std::string& comment = {});
FineGridPath read_path_csv(const std::string& points_path, const std::string& jumps_path, std::size_t n_coarse);

}  // namespace hfpath
