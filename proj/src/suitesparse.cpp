#include "mpexp/suitesparse.hpp"

#include <curl/curl.h>
#include <zlib.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <vector>

#include "mpexp/errors.hpp"
#include "mpexp/matrix_market.hpp"

namespace fs = std::filesystem;

namespace mpexp {

namespace {

using K = FetchError::Kind;

struct Resolved {
  std::string group;
  std::string name;
};

Resolved resolve(const std::string& spec) {
  const auto slash = spec.find('/');
  if (slash != std::string::npos) {
    Resolved r{spec.substr(0, slash), spec.substr(slash + 1)};
    if (r.group.empty() || r.name.empty() || r.name.find('/') != std::string::npos)
      throw FetchError(K::unknown_name, "malformed matrix name '" + spec + "' (expected group/name)");
    return r;
  }
  if (auto g = suitesparse_group(spec)) return {*g, spec};
  throw FetchError(K::unknown_name, "unknown matrix '" + spec + "'; pass it as <group>/<name>");
}

std::string base_url(const FetchOptions& opts) {
  if (!opts.base_url.empty()) return opts.base_url;
  if (const char* env = std::getenv("MPEXP_SUITESPARSE_URL"); env && *env) return env;
  return "https://sparse.tamu.edu/MM";
}

size_t write_to_file(char* data, size_t size, size_t n, void* user) {
  return std::fwrite(data, size, n, static_cast<std::FILE*>(user)) * size;
}

void download(const std::string& url, const fs::path& dest, const FetchOptions& opts) {
  static std::once_flag init;
  std::call_once(init, [] { curl_global_init(CURL_GLOBAL_DEFAULT); });

  std::FILE* f = std::fopen(dest.c_str(), "wb");
  if (!f) throw FetchError(K::io, "cannot write " + dest.string());
  CURL* curl = curl_easy_init();
  if (!curl) {
    std::fclose(f);
    throw FetchError(K::network, "curl_easy_init failed");
  }
  char errbuf[CURL_ERROR_SIZE] = {0};
  curl_easy_setopt(curl, CURLOPT_URL, url.c_str());
  curl_easy_setopt(curl, CURLOPT_WRITEFUNCTION, write_to_file);
  curl_easy_setopt(curl, CURLOPT_WRITEDATA, f);
  curl_easy_setopt(curl, CURLOPT_FOLLOWLOCATION, 1L);
  curl_easy_setopt(curl, CURLOPT_TIMEOUT, opts.timeout_seconds);
  curl_easy_setopt(curl, CURLOPT_ERRORBUFFER, errbuf);
  const CURLcode rc = curl_easy_perform(curl);
  long status = 0;
  curl_easy_getinfo(curl, CURLINFO_RESPONSE_CODE, &status);
  curl_easy_cleanup(curl);
  std::fclose(f);

  if (rc == CURLE_FILE_COULDNT_READ_FILE || status == 404)
    throw FetchError(K::unknown_name, "no archive at " + url);
  if (rc != CURLE_OK) throw FetchError(K::network, "download of " + url + " failed: " + (errbuf[0] ? errbuf : curl_easy_strerror(rc)));
  if (status >= 400) throw FetchError(K::network, "download of " + url + " returned HTTP " + std::to_string(status));
}

std::vector<char> gunzip(const fs::path& path) {
  gzFile gz = gzopen(path.c_str(), "rb");
  if (!gz) throw FetchError(K::extract, "cannot open " + path.string());
  std::vector<char> out;
  char buf[1 << 16];
  for (;;) {
    const int n = gzread(gz, buf, sizeof buf);
    if (n < 0) {
      int errnum = 0;
      const std::string msg = gzerror(gz, &errnum);
      gzclose(gz);
      throw FetchError(K::extract, "corrupt gzip stream in " + path.string() + ": " + msg);
    }
    if (n == 0) break;
    out.insert(out.end(), buf, buf + n);
  }
  const int rc = gzclose(gz);
  if (rc != Z_OK) throw FetchError(K::extract, "gzip trailer check failed for " + path.string());
  return out;
}

unsigned long long parse_octal(const char* p, std::size_t n) {
  unsigned long long v = 0;
  for (std::size_t i = 0; i < n && p[i]; ++i) {
    if (p[i] == ' ') continue;
    if (p[i] < '0' || p[i] > '7') break;
    v = v * 8 + static_cast<unsigned>(p[i] - '0');
  }
  return v;
}

// Returns the contents of the first regular member whose basename is `member`.
std::string extract_member(const std::vector<char>& tar, const std::string& member) {
  std::size_t pos = 0;
  std::string long_name;
  while (pos + 512 <= tar.size()) {
    const char* h = tar.data() + pos;
    if (std::all_of(h, h + 512, [](char c) { return c == 0; })) break;

    unsigned long long sum = 0;
    for (int i = 0; i < 512; ++i) sum += (i >= 148 && i < 156) ? ' ' : static_cast<unsigned char>(h[i]);
    if (sum != parse_octal(h + 148, 8)) throw FetchError(K::extract, "tar header checksum mismatch");

    const auto size = parse_octal(h + 124, 12);
    const char type = h[156];
    const bool from_long_name = !long_name.empty();
    std::string name = from_long_name ? long_name : std::string(h, strnlen(h, 100));
    long_name.clear();
    if (!from_long_name && std::memcmp(h + 257, "ustar", 5) == 0 && h[345]) {
      const std::string prefix(h + 345, strnlen(h + 345, 155));
      if (name.find('/') == std::string::npos || name.rfind(prefix, 0) != 0) name = prefix + "/" + name;
    }
    const std::size_t data = pos + 512;
    if (data + size > tar.size()) throw FetchError(K::extract, "tar member '" + name + "' is truncated");

    if (type == 'L') {
      long_name.assign(tar.data() + data, strnlen(tar.data() + data, size));
    } else if (type == '0' || type == '\0') {
      const auto slash = name.rfind('/');
      const std::string base = slash == std::string::npos ? name : name.substr(slash + 1);
      if (base == member) return std::string(tar.data() + data, size);
    }
    pos = data + ((size + 511) / 512) * 512;
  }
  throw FetchError(K::extract, "archive does not contain " + member);
}

}  // namespace

std::optional<std::string> suitesparse_group(const std::string& name) {
  static const std::map<std::string, std::string> known = {
      {"orani678", "HB"}, {"bcspwr10", "HB"}, {"bcspwr01", "HB"}, {"gr_30_30", "HB"},
  };
  auto it = known.find(name);
  if (it == known.end()) return std::nullopt;
  return it->second;
}

fs::path suitesparse_cache_path(const std::string& name, const fs::path& cache_dir) {
  const Resolved r = resolve(name);
  return cache_dir / r.group / (r.name + ".mtx");
}

fs::path fetch_suitesparse(const std::string& name, const fs::path& cache_dir, const FetchOptions& opts) {
  const Resolved r = resolve(name);
  const fs::path target = cache_dir / r.group / (r.name + ".mtx");
  if (fs::exists(target)) return target;

  std::error_code ec;
  fs::create_directories(target.parent_path(), ec);
  if (ec) throw FetchError(K::io, "cannot create " + target.parent_path().string() + ": " + ec.message());

  const fs::path archive = target.parent_path() / (r.name + ".tar.gz.part");
  const fs::path staging = target.parent_path() / (r.name + ".mtx.part");
  struct Cleanup {
    fs::path a, b;
    ~Cleanup() {
      std::error_code ignored;
      fs::remove(a, ignored);
      fs::remove(b, ignored);
    }
  } cleanup{archive, staging};

  download(base_url(opts) + "/" + r.group + "/" + r.name + ".tar.gz", archive, opts);
  const std::string mtx = extract_member(gunzip(archive), r.name + ".mtx");
  {
    std::ofstream out(staging, std::ios::binary);
    out.write(mtx.data(), static_cast<std::streamsize>(mtx.size()));
    if (!out) throw FetchError(K::io, "cannot write " + staging.string());
  }
  fs::rename(staging, target, ec);
  if (ec) throw FetchError(K::io, "cannot move " + staging.string() + " into the cache: " + ec.message());
  return target;
}

CsrMatrix load_suitesparse(const std::string& name, const fs::path& cache_dir, const FetchOptions& opts) {
  return read_matrix_market(fetch_suitesparse(name, cache_dir, opts));
}

fs::path default_cache_dir() {
  if (const char* env = std::getenv("MPEXP_CACHE_DIR"); env && *env) return env;
  return fs::current_path() / "suitesparse-cache";
}

}  // namespace mpexp
