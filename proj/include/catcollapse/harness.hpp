#pragma once

// Batch plumbing: seeded parallel ensembles, content digests, CSV/JSON
// emission with provenance, and binomial / chi-square summaries.

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <atomic>
#include <boost/math/distributions/chi_squared.hpp>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <string>
#include <string_view>
#include <system_error>
#include <thread>
#include <vector>

#include "json.hpp"

#include "catcollapse/errors.hpp"

namespace catcollapse::harness {

/// Lower-case hex SHA-256 of a byte string.
inline std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[md[i] >> 4];
    out += kHex[md[i] & 0xf];
  }
  return out;
}

/// Worker count: hardware concurrency, capped by CATCOLLAPSE_THREADS.
inline unsigned worker_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CATCOLLAPSE_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  return n;
}

/// Run fn(i) for i in [0, n) on a worker pool; results are stored by index so
/// the output order never depends on scheduling. The exception of the lowest
/// failing index is rethrown.
template <class R>
std::vector<R> run_ensemble(std::size_t n, const std::function<R(std::size_t)>& fn, unsigned workers = worker_count()) {
  std::vector<R> results(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n || failed.load()) return;
      try {
        results[i] = fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
        failed = true;
      }
    }
  };
  workers = static_cast<unsigned>(std::min<std::size_t>(std::max(workers, 1u), std::max<std::size_t>(n, 1)));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

/// Shortest round-trip decimal form of a double.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

/// Quote a CSV field when it carries separators or quotes.
inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

struct Provenance {
  std::string config_sha256;
  std::uint64_t seed = 0;
};

/// CSV file with the provenance comment line followed by the header row.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const Provenance& prov, std::string_view header) : out_(path) {
    if (!out_) throw Error("cannot write " + path.string());
    out_ << "# config_sha256=" << prov.config_sha256 << " seed=" << prov.seed << '\n' << header << '\n';
  }
  template <class... Fields>
  void row(const Fields&... fields) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(fields), first = false), ...);
    out_ << '\n';
  }

 private:
  static std::string cell(double v) { return fmt(v); }
  static std::string cell(const std::string& s) { return csv_field(s); }
  static std::string cell(std::string_view s) { return csv_field(s); }
  static std::string cell(const char* s) { return csv_field(s); }
  template <class I>
    requires std::is_integral_v<I>
  static std::string cell(I v) {
    return std::to_string(v);
  }
  std::ofstream out_;
};

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

/// Normal-approximation binomial standard error sqrt(p (1 - p) / n).
inline double binomial_sigma(double p, std::size_t n) {
  return n == 0 ? 0.0 : std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

struct ChiSquare {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

/// Pearson chi-square of observed counts against expected probabilities.
/// Zero-probability categories are skipped unless they were observed, which
/// forces p = 0.
inline ChiSquare chi_square(const std::vector<std::size_t>& counts, const std::vector<double>& probs) {
  if (counts.size() != probs.size()) throw InvalidArgument("chi_square: size mismatch");
  std::size_t n = 0;
  for (auto c : counts) n += c;
  ChiSquare r;
  int categories = 0;
  bool impossible = false;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (probs[i] <= 0.0) {
      impossible = impossible || counts[i] > 0;
      continue;
    }
    const double e = probs[i] * static_cast<double>(n);
    r.statistic += (static_cast<double>(counts[i]) - e) * (static_cast<double>(counts[i]) - e) / e;
    ++categories;
  }
  r.dof = std::max(categories - 1, 0);
  if (impossible) {
    r.p_value = 0.0;
  } else if (r.dof > 0) {
    r.p_value = boost::math::cdf(boost::math::complement(boost::math::chi_squared(r.dof), r.statistic));
  }
  return r;
}

}  // namespace catcollapse::harness
