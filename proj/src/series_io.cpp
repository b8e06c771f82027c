#include "garch_ecf/series_io.hpp"

#include "garch_ecf/errors.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace garch_ecf {

namespace {

std::string format_double(double v) {
    char buf[32];
    const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
    return {buf, static_cast<std::size_t>(len)};
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& s, const std::filesystem::path& path, std::size_t line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw IoError(path.string() + ":" + std::to_string(line) + ": not a number: '" + s + "'");
}

}  // namespace

void write_series_csv(const std::filesystem::path& path, const std::vector<double>& y,
                      const std::vector<double>* sigma2_true) {
    if (sigma2_true != nullptr && sigma2_true->size() != y.size())
        throw std::invalid_argument("sigma2_true must have the same length as y");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << (sigma2_true != nullptr ? "n,y,sigma2_true\n" : "n,y\n");
    for (std::size_t i = 0; i < y.size(); ++i) {
        out << i << ',' << format_double(y[i]);
        if (sigma2_true != nullptr) out << ',' << format_double((*sigma2_true)[i]);
        out << '\n';
    }
    if (!out) throw IoError("write failed for " + path.string());
}

SeriesData read_series_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> header = split(line);
    if (header.size() < 2 || header[0] != "n" || header[1] != "y")
        throw IoError(path.string() + ": expected header 'n,y[,sigma2_true]'");
    const bool has_sigma = header.size() >= 3 && header[2] == "sigma2_true";

    SeriesData data;
    if (has_sigma) data.sigma2_true.emplace();
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> f = split(line);
        if (f.size() < (has_sigma ? 3U : 2U))
            throw IoError(path.string() + ":" + std::to_string(lineno) + ": too few columns");
        data.y.push_back(parse_double(f[1], path, lineno));
        if (has_sigma) data.sigma2_true->push_back(parse_double(f[2], path, lineno));
    }
    if (data.y.empty()) throw IoError(path.string() + ": no observations");
    return data;
}

}  // namespace garch_ecf
