#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "lanlab/core.hpp"
#include "lanlab/simulate.hpp"

namespace lanlab {

/// Shortest round-trippable decimal representation of a double.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Observation CSV: header "k,t,x_1..x_d", one row per grid point.
inline void write_observation_csv(const ObservationRecord& rec, std::ostream& os) {
  os << "k,t";
  for (std::size_t i = 1; i <= rec.dim; ++i) os << ",x_" << i;
  os << "\n";
  for (std::size_t k = 0; k <= rec.n; ++k) {
    os << k << "," << format_double(double(k) * rec.delta_n);
    const auto x = rec.state(k);
    for (std::size_t i = 0; i < rec.dim; ++i) os << "," << format_double(x[i]);
    os << "\n";
  }
}

inline void write_observation_csv(const ObservationRecord& rec, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw error("write_observation_csv: cannot open " + path);
  write_observation_csv(rec, os);
}

namespace detail {

inline void require_little_endian() {
  if constexpr (std::endian::native != std::endian::little)
    throw unsupported_error("latent sidecar: little-endian host required");
}

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

}  // namespace detail

/// Binary latent sidecar, little-endian:
///   magic "LANL", u32 version, u32 d, u64 n, f64 delta_n, u32 fine_substeps,
///   then per interval: d*f64 Brownian increment; u32 jump count; per jump
///   {f64 time, d*f64 size, d*f64 applied}; when fine_substeps > 0,
///   (fine_substeps+1)*d*f64 sub-grid states and fine_substeps*d*f64
///   sub-grid Brownian increments.
inline void write_latent_sidecar(const ObservationRecord& rec, const std::string& path) {
  if (!rec.has_latent()) throw precondition_error("write_latent_sidecar: no latent data");
  detail::require_little_endian();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw error("write_latent_sidecar: cannot open " + path);
  os.write("LANL", 4);
  detail::put<std::uint32_t>(os, 1u);
  detail::put<std::uint32_t>(os, std::uint32_t(rec.dim));
  detail::put<std::uint64_t>(os, std::uint64_t(rec.n));
  detail::put<double>(os, rec.delta_n);
  detail::put<std::uint32_t>(os, std::uint32_t(rec.fine_substeps));
  for (const IntervalLatent& lat : rec.latent) {
    for (double v : lat.brownian_increment) detail::put<double>(os, v);
    detail::put<std::uint32_t>(os, std::uint32_t(lat.jumps.size()));
    for (const JumpEventRec& ev : lat.jumps) {
      detail::put<double>(os, ev.time);
      for (double v : ev.size) detail::put<double>(os, v);
      for (double v : ev.applied) detail::put<double>(os, v);
    }
    if (rec.fine_substeps > 0) {
      for (double v : lat.fine_states) detail::put<double>(os, v);
      for (double v : lat.fine_dw) detail::put<double>(os, v);
    }
  }
}

/// Reads a latent sidecar back into a record skeleton (values stay empty).
inline ObservationRecord read_latent_sidecar(const std::string& path) {
  detail::require_little_endian();
  std::ifstream is(path, std::ios::binary);
  if (!is) throw error("read_latent_sidecar: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (std::memcmp(magic, "LANL", 4) != 0) throw error("read_latent_sidecar: bad magic");
  if (detail::get<std::uint32_t>(is) != 1u) throw error("read_latent_sidecar: bad version");
  ObservationRecord rec;
  rec.dim = detail::get<std::uint32_t>(is);
  rec.n = detail::get<std::uint64_t>(is);
  rec.delta_n = detail::get<double>(is);
  rec.fine_substeps = int(detail::get<std::uint32_t>(is));
  rec.latent.resize(rec.n);
  for (IntervalLatent& lat : rec.latent) {
    lat.brownian_increment.resize(rec.dim);
    for (double& v : lat.brownian_increment) v = detail::get<double>(is);
    const std::uint32_t count = detail::get<std::uint32_t>(is);
    lat.jumps.resize(count);
    for (JumpEventRec& ev : lat.jumps) {
      ev.time = detail::get<double>(is);
      ev.size.resize(rec.dim);
      for (double& v : ev.size) v = detail::get<double>(is);
      ev.applied.resize(rec.dim);
      for (double& v : ev.applied) v = detail::get<double>(is);
    }
    if (rec.fine_substeps > 0) {
      lat.fine_states.resize((rec.fine_substeps + 1) * rec.dim);
      for (double& v : lat.fine_states) v = detail::get<double>(is);
      lat.fine_dw.resize(std::size_t(rec.fine_substeps) * rec.dim);
      for (double& v : lat.fine_dw) v = detail::get<double>(is);
    }
  }
  if (!is) throw error("read_latent_sidecar: truncated file");
  return rec;
}

}  // namespace lanlab
