#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace agewise {

class parse_error : public std::runtime_error {
public:
  parse_error(std::string msg, std::size_t line, std::size_t col)
      : std::runtime_error("line " + std::to_string(line) + ", col " + std::to_string(col) + ": " + std::move(msg)),
        line_(line), col_(col) {}
  std::size_t line() const { return line_; }
  std::size_t col() const { return col_; }

private:
  std::size_t line_, col_;
};

class model_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class detect_error : public std::runtime_error {
public:
  detect_error(std::string stage, std::string cause)
      : std::runtime_error(stage + ": " + cause), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

private:
  std::string stage_;
};

// --- deterministic number formatting -----------------------------------
// Shortest decimal form that parses back to the identical double, so every
// text artifact round-trips bit-exactly.
inline std::string fmt_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw std::runtime_error("fmt_double: to_chars failed");
  return std::string(buf, p);
}

inline double parse_double(std::string_view s, std::size_t line = 0, std::size_t col = 0) {
  double v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw parse_error("malformed number '" + std::string(s) + "'", line, col);
  return v;
}

inline std::int64_t parse_int(std::string_view s, std::size_t line = 0, std::size_t col = 0) {
  std::int64_t v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw parse_error("malformed integer '" + std::string(s) + "'", line, col);
  return v;
}

inline std::uint64_t parse_uint(std::string_view s, std::size_t line = 0, std::size_t col = 0) {
  std::uint64_t v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw parse_error("malformed integer '" + std::string(s) + "'", line, col);
  return v;
}

// --- string helpers ------------------------------------------------------
inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::vector<std::string_view> split_char(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

// key=value token; returns empty views if '=' missing
inline std::pair<std::string_view, std::string_view> split_kv(std::string_view tok) {
  auto pos = tok.find('=');
  if (pos == std::string_view::npos) return {{}, {}};
  return {tok.substr(0, pos), tok.substr(pos + 1)};
}

inline std::string read_text_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& p, std::string_view text) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + p.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("write failed: " + p.string());
}

// --- deterministic randomness -------------------------------------------
// splitmix64: used only to derive decorrelated child seeds from (seed, stream).
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix64(mix64(seed) ^ mix64(stream * 0x9e3779b97f4a7c15ull + 0x165667b19e3779f9ull));
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return derive_seed(derive_seed(seed, a), b);
}

using rng_t = std::mt19937_64;

inline rng_t make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return rng_t(derive_seed(seed, stream));
}

// Hand-rolled samplers: std::uniform_real_distribution / normal_distribution
// output is implementation-defined, which would tie artifact bytes to the
// standard library version.
inline double runif(rng_t& rng) {  // [0, 1)
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double runif(rng_t& rng, double lo, double hi) { return lo + (hi - lo) * runif(rng); }

inline double rnorm(rng_t& rng) {  // Box-Muller, one value per call pair kept simple
  double u1 = 0.0;
  do { u1 = runif(rng); } while (u1 <= 0.0);
  double u2 = runif(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

inline double rnorm_trunc(rng_t& rng, double mean, double sigma, double nsigma = 3.0) {
  if (sigma <= 0.0) return mean;
  for (int i = 0; i < 1000; ++i) {
    double z = rnorm(rng);
    if (std::abs(z) <= nsigma) return mean + sigma * z;
  }
  return mean;  // unreachable in practice
}

// Fisher-Yates with our own uniform index draw.
template <typename T>
void shuffle_vec(std::vector<T>& v, rng_t& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

// --- parallel map ---------------------------------------------------------
// Deterministic: the output slot for index i never depends on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  threads = std::min<unsigned>(threads, static_cast<unsigned>(n));
  std::vector<std::thread> pool;
  pool.reserve(threads);
  std::exception_ptr first_error;
  std::mutex err_mu;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += threads) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mu);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

inline unsigned default_threads() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : n;
}

}  // namespace agewise
