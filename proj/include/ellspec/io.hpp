/* Copyright 2026 The ellspec Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Serialization: profile JSON, ELXM binary matrices, CSV grids and run
// manifests. Requires the nlohmann/json single header on the include path.

#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ellspec/common.hpp"
#include "ellspec/dyson.hpp"
#include "ellspec/ensemble.hpp"
#include "json.hpp"

namespace ellspec {

using Json = nlohmann::ordered_json;

namespace detail {

inline Json complex_to_json(cplx z) {
  if (z.imag() == 0.0) return z.real();
  return Json::array({z.real(), z.imag()});
}

inline cplx complex_from_json(const Json& j, const char* what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  throw InputError(std::string(what) + ": expected a number or [re, im]");
}

// Matrix field: {"kind": "constant", "value": v} or a row-major array
// (nested rows or a flat list of n^2 entries).
inline CMat matrix_from_json(const Json& j, int n, const char* what) {
  CMat m(n, n);
  if (j.is_object()) {
    if (j.value("kind", "") != "constant" || !j.contains("value"))
      throw InputError(std::string(what) + ": object form must be {\"kind\": \"constant\", \"value\": ...}");
    m.setConstant(complex_from_json(j["value"], what));
    return m;
  }
  if (!j.is_array()) throw InputError(std::string(what) + ": expected an array or a constant object");
  const bool nested = !j.empty() && j[0].is_array() && !(j[0].size() == 2 && j.size() == static_cast<std::size_t>(n) * n);
  if (nested) {
    if (j.size() != static_cast<std::size_t>(n)) throw InputError(std::string(what) + ": expected n rows");
    for (int i = 0; i < n; ++i) {
      if (!j[i].is_array() || j[i].size() != static_cast<std::size_t>(n))
        throw InputError(std::string(what) + ": row " + std::to_string(i) + " must have n entries");
      for (int k = 0; k < n; ++k) m(i, k) = complex_from_json(j[i][k], what);
    }
  } else {
    if (j.size() != static_cast<std::size_t>(n) * n) throw InputError(std::string(what) + ": expected n^2 entries");
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) m(i, k) = complex_from_json(j[static_cast<std::size_t>(i) * n + k], what);
  }
  return m;
}

inline Json matrix_to_json(const CMat& m) {
  const auto n = m.rows();
  bool constant = n > 0;
  for (Eigen::Index i = 0; i < n && constant; ++i)
    for (Eigen::Index k = 0; k < n && constant; ++k) constant = m(i, k) == m(0, 0);
  if (constant) return Json{{"kind", "constant"}, {"value", complex_to_json(m(0, 0))}};
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < n; ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < n; ++k) row.push_back(complex_to_json(m(i, k)));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace detail

inline Json profile_to_json(const CorrelationProfile& p) {
  return Json{{"n", p.n()},
              {"s", detail::matrix_to_json(p.s.cast<cplx>())},
              {"t", detail::matrix_to_json(p.t)},
              {"rho_bound", p.rho_bound}};
}

/// Parses and structure-checks a profile document; throws InputError on any defect.
inline CorrelationProfile profile_from_json(const Json& j) {
  if (!j.is_object()) throw InputError("profile: top level must be an object");
  for (const char* key : {"n", "s", "t"})
    if (!j.contains(key)) throw InputError(std::string("profile: missing field \"") + key + "\"");
  if (!j["n"].is_number_integer() || j["n"].get<long long>() < 1) throw InputError("profile: n must be a positive integer");
  const int n = j["n"].get<int>();
  CorrelationProfile p;
  const CMat s = detail::matrix_from_json(j["s"], n, "profile.s");
  if ((s.imag().array() != 0.0).any()) throw InputError("profile.s: entries must be real");
  p.s = s.real();
  p.t = detail::matrix_from_json(j["t"], n, "profile.t");
  if (j.contains("rho_bound")) {
    if (!j["rho_bound"].is_number()) throw InputError("profile: rho_bound must be a number");
    p.rho_bound = j["rho_bound"].get<double>();
  } else {
    p.rho_bound = validate_profile(p, 1).rho_hat;
  }
  check_structure(p);
  return p;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << text;
  if (!out) throw InputError("write failed: " + path);
}

inline Json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(origin + ": JSON parse error: " + e.what());
  }
}

inline CorrelationProfile load_profile(const std::string& path) {
  try {
    return profile_from_json(parse_json_text(read_text_file(path), path));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

inline void save_profile(const std::string& path, const CorrelationProfile& p) {
  write_text_file(path, profile_to_json(p).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// ELXM: "ELXM", u32 n (little-endian), n^2 complex doubles row-major (re, im).

namespace detail {

template <typename T>
void put_le(std::string& out, T v) {
  static_assert(std::endian::native == std::endian::little, "ELXM writer assumes a little-endian host");
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T get_le(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw InputError("ELXM: truncated file");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace detail

inline std::string encode_elxm(const CMat& x) {
  if (x.rows() != x.cols()) fail(ErrorKind::InvalidArgument, "ELXM: matrix must be square");
  std::string out = "ELXM";
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index k = 0; k < x.cols(); ++k) {
      detail::put_le<double>(out, x(i, k).real());
      detail::put_le<double>(out, x(i, k).imag());
    }
  return out;
}

inline CMat decode_elxm(const std::string& in) {
  if (in.size() < 8 || in.compare(0, 4, "ELXM") != 0) throw InputError("ELXM: bad magic");
  std::size_t pos = 4;
  const auto n = detail::get_le<std::uint32_t>(in, pos);
  if (in.size() != 8 + static_cast<std::size_t>(n) * n * 16) throw InputError("ELXM: size does not match header");
  CMat x(n, n);
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t k = 0; k < n; ++k) {
      const double re = detail::get_le<double>(in, pos);
      const double im = detail::get_le<double>(in, pos);
      x(i, k) = {re, im};
    }
  return x;
}

inline void save_elxm(const std::string& path, const CMat& x) { write_text_file(path, encode_elxm(x)); }
inline CMat load_elxm(const std::string& path) { return decode_elxm(read_text_file(path)); }

// ---------------------------------------------------------------------------
// CSV with round-trip precision; identical inputs give identical bytes.

inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : cols_(header.size()) { row_strings(header); }

  void row(const std::vector<double>& values) {
    if (values.size() != cols_) fail(ErrorKind::InvalidArgument, "CsvWriter: column count mismatch");
    std::vector<std::string> s;
    s.reserve(values.size());
    for (double v : values) s.push_back(fmt_double(v));
    row_strings(s);
  }

  const std::string& str() const { return text_; }
  void save(const std::string& path) const { write_text_file(path, text_); }

 private:
  void row_strings(const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (k) text_ += ',';
      text_ += cells[k];
    }
    text_ += '\n';
  }

  std::size_t cols_;
  std::string text_;
};

inline Json pseudo_resolvent_to_json(const PseudoResolvent& pr) {
  Json b = Json::array();
  for (Eigen::Index i = 0; i < pr.b.size(); ++i) b.push_back(Json::array({pr.b[i].real(), pr.b[i].imag()}));
  return Json{{"zeta", Json::array({pr.zeta.real(), pr.zeta.imag()})},
              {"delta", pr.delta},
              {"residual", pr.residual},
              {"member", pr.member},
              {"b", std::move(b)}};
}

/// Manifest echoing a run: subcommand, resolved parameters, seed and version.
inline Json make_manifest(const std::string& subcommand, const Json& params, std::uint64_t seed,
                          const std::vector<std::string>& outputs) {
  return Json{{"subcommand", subcommand}, {"parameters", params}, {"seed", seed}, {"version", kVersion},
              {"outputs", outputs}};
}

}  // namespace ellspec
