#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "mpexp/sparse.hpp"

namespace mpexp {

struct FetchOptions {
  /// Collection root; archives live at <base_url>/<group>/<name>.tar.gz. When
  /// empty, $MPEXP_SUITESPARSE_URL or https://sparse.tamu.edu/MM is used.
  std::string base_url;
  long timeout_seconds = 120;
};

/// Collection group for the matrices this project knows by bare name.
std::optional<std::string> suitesparse_group(const std::string& name);

/// Path of the cached Matrix Market file for `name` ("orani678" or "HB/orani678").
std::filesystem::path suitesparse_cache_path(const std::string& name, const std::filesystem::path& cache_dir);

/// Returns <cache>/<group>/<name>.mtx, downloading and extracting the archive
/// first when it is not cached. Throws FetchError; a partial download never
/// lands in the cache.
std::filesystem::path fetch_suitesparse(const std::string& name, const std::filesystem::path& cache_dir,
                                        const FetchOptions& opts = {});

/// fetch_suitesparse + read_matrix_market.
CsrMatrix load_suitesparse(const std::string& name, const std::filesystem::path& cache_dir, const FetchOptions& opts = {});

/// $MPEXP_CACHE_DIR, else ./suitesparse-cache.
std::filesystem::path default_cache_dir();

}  // namespace mpexp
