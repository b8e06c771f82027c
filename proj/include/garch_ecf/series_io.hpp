#pragma once

#include <filesystem>
#include <optional>
#include <vector>

namespace garch_ecf {

struct SeriesData {
    std::vector<double> y;
    std::optional<std::vector<double>> sigma2_true;
};

/// Columnar CSV with header `n,y` or `n,y,sigma2_true`; values are written
/// with 17 significant digits so that a round trip is lossless.
void write_series_csv(const std::filesystem::path& path, const std::vector<double>& y,
                      const std::vector<double>* sigma2_true = nullptr);

/// Reads files produced by write_series_csv (the sigma2_true column is optional).
/// Throws IoError with the offending path and line.
[[nodiscard]] SeriesData read_series_csv(const std::filesystem::path& path);

}  // namespace garch_ecf
