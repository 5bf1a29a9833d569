#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "estimates.hpp"
#include "processes.hpp"
#include "stats.hpp"

namespace andersonlab {

using nlohmann::json;

// Shortest round-trip decimal form; locale-free and identical across runs,
// which is what makes output files byte-comparable.
inline std::string format_number(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  if (res.ec != std::errc{}) throw std::runtime_error("format_number: to_chars failed");
  return std::string(buf, res.ptr);
}

inline std::string format_integer(long long x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  if (res.ec != std::errc{}) throw std::runtime_error("format_integer: to_chars failed");
  return std::string(buf, res.ptr);
}

inline std::uint64_t fnv1a(const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a(const std::string& s) { return fnv1a(s.data(), s.size()); }

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out = "0x";
  for (int shift = 60; shift >= 0; shift -= 4) out.push_back(digits[(v >> shift) & 0xf]);
  return out;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for reading: " + path.string());
  std::string out((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return out;
}

inline std::string counts_csv_text(const CountEnsemble& ens) {
  std::string out = "realization_index,xi";
  const std::size_t n_blocks = ens.eta.empty() ? 0 : ens.eta.front().size();
  for (std::size_t p = 1; p <= n_blocks; ++p) out += ",eta_" + format_integer(static_cast<long long>(p));
  out += "\n";
  for (std::size_t i = 0; i < ens.xi.size(); ++i) {
    out += format_integer(static_cast<long long>(i));
    out += ',';
    out += format_integer(ens.xi[i]);
    if (n_blocks > 0) {
      for (long v : ens.eta[i]) {
        out += ',';
        out += format_integer(v);
      }
    }
    out += '\n';
  }
  return out;
}

inline std::string pmf_csv_text(const Pmf& empirical, const Pmf& reference) {
  std::string out = "k,empirical,poisson\n";
  const std::size_t n = std::max(empirical.p.size(), reference.p.size());
  for (std::size_t k = 0; k < n; ++k) {
    out += format_integer(static_cast<long long>(k));
    out += ',';
    out += format_number(k < empirical.p.size() ? empirical.p[k] : 0.0);
    out += ',';
    out += format_number(k < reference.p.size() ? reference.p[k] : 0.0);
    out += '\n';
  }
  return out;
}

inline std::string ids_csv_text(const IdsEstimate& ids) {
  std::string out = "E,N,stderr\n";
  for (std::size_t j = 0; j < ids.energies.size(); ++j) {
    out += format_number(ids.energies[j]);
    out += ',';
    out += format_number(ids.values[j]);
    out += ',';
    out += format_number(ids.stderrs[j]);
    out += '\n';
  }
  return out;
}

inline std::string derivative_csv_text(const AlphaDerivative& der) {
  std::string out = "epsilon,ratio\n";
  for (std::size_t j = 0; j < der.epsilons.size(); ++j) {
    out += format_number(der.epsilons[j]);
    out += ',';
    out += format_number(der.ratios[j]);
    out += '\n';
  }
  return out;
}

inline std::string decay_csv_text(const DecayScan& scan) {
  std::string out = "distance,mean_moment,stderr\n";
  for (const auto& pt : scan.points) {
    out += format_integer(pt.distance);
    out += ',';
    out += format_number(pt.mean_moment);
    out += ',';
    out += format_number(pt.stderr_moment);
    out += '\n';
  }
  return out;
}

inline json inequality_json(const InequalityReport& rep) {
  return json{{"name", rep.name},          {"lhs", rep.lhs},           {"stderr", rep.stderr_lhs},
              {"rhs", rep.rhs},            {"pass", rep.pass()},       {"interval", {rep.interval.a, rep.interval.b}},
              {"volume", rep.volume},      {"realizations", rep.n_real}};
}

}  // namespace andersonlab
