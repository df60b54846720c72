#include "hfpath/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hfpath/error.hpp"

namespace hfpath {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_display(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    std::string s(buf, res.ptr);
    if (std::isfinite(v) && s.find_first_of(".eE") == std::string::npos) s += ".0";
    return s;
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) {
        if (!cell.empty() && cell.back() == '\r') cell.pop_back();
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::vector<std::vector<std::string>> read_csv_rows(const std::string& path, const std::string& expected_header) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open " + path);
    std::string line;
    bool header_seen = false;
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (line != expected_header) throw ArgumentError(path + ": expected header '" + expected_header + "'");
            header_seen = true;
            continue;
        }
        rows.push_back(split_csv_line(line));
    }
    if (!header_seen) throw ArgumentError(path + ": missing header");
    return rows;
}

double parse_double(const std::string& text, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ArgumentError(what + ": not a number: '" + text + "'");
    }
}

std::uint64_t parse_u64(const std::string& text, const std::string& what) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw ArgumentError(what + ": not an unsigned integer: '" + text + "'");
    }
    return v;
}

void write_path_csv(const FineGridPath& path, const std::string& points_path, const std::string& jumps_path,
                    const std::string& comment) {
    std::ofstream out(points_path);
    if (!out) throw ArgumentError("cannot write " + points_path);
    if (!comment.empty()) out << "# " << comment << '\n';
    out << "fine_index,time,x,sigma\n";
    for (std::size_t k = 0; k < path.x.size(); ++k) {
        out << k << ',' << format_double(path.grid.time_at(k)) << ',' << format_double(path.x[k]) << ','
            << format_double(path.sigma[k]) << '\n';
    }
    std::ofstream jout(jumps_path);
    if (!jout) throw ArgumentError("cannot write " + jumps_path);
    if (!comment.empty()) jout << "# " << comment << '\n';
    jout << "time,size,kappa,sigma_left,sigma_right\n";
    for (const auto& j : path.jumps) {
        jout << format_double(j.time) << ',' << format_double(j.size) << ',' << format_double(j.kappa) << ','
             << format_double(j.sigma_left) << ',' << format_double(j.sigma_right) << '\n';
    }
}

FineGridPath read_path_csv(const std::string& points_path, const std::string& jumps_path, std::size_t n_coarse) {
    const auto rows = read_csv_rows(points_path, "fine_index,time,x,sigma");
    if (rows.size() < 2) throw ArgumentError(points_path + ": need at least two points");
    if (n_coarse == 0 || (rows.size() - 1) % n_coarse != 0) {
        throw ArgumentError(points_path + ": point count is not n_coarse * m_fine + 1");
    }
    FineGridPath path;
    path.grid.n_coarse = n_coarse;
    path.grid.m_fine = (rows.size() - 1) / n_coarse;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto& r = rows[k];
        if (r.size() != 4) throw ArgumentError(points_path + ": expected 4 columns");
        if (parse_u64(r[0], "fine_index") != k) throw ArgumentError(points_path + ": fine_index out of sequence");
        path.x.push_back(parse_double(r[2], "x"));
        path.sigma.push_back(parse_double(r[3], "sigma"));
    }
    path.grid.horizon = parse_double(rows.back()[1], "time");
    path.grid.validate();
    const double dn = path.grid.delta_n();
    for (const auto& r : read_csv_rows(jumps_path, "time,size,kappa,sigma_left,sigma_right")) {
        if (r.size() != 5) throw ArgumentError(jumps_path + ": expected 5 columns");
        JumpRecord j;
        j.time = parse_double(r[0], "time");
        j.size = parse_double(r[1], "size");
        j.kappa = parse_double(r[2], "kappa");
        j.sigma_left = parse_double(r[3], "sigma_left");
        j.sigma_right = parse_double(r[4], "sigma_right");
        j.coarse_index = static_cast<std::size_t>(std::floor(j.time / dn)) + 1;
        const auto cell = static_cast<std::size_t>(std::ceil(j.kappa * static_cast<double>(path.grid.m_fine)));
        j.fine_index = (j.coarse_index - 1) * path.grid.m_fine + std::max<std::size_t>(cell, 1);
        path.jumps.push_back(j);
    }
    return path;
}

}  // namespace hfpath
