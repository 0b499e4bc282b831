#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "covrate/fusion.hpp"
#include "covrate/gaussian_model.hpp"

namespace covrate {

using Json = nlohmann::json;

/// {"n": rows, "rows": [[...], ...]}, row-major. Non-square matrices add "cols".
inline Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  Json out = {{"n", m.rows()}, {"rows", std::move(rows)}};
  if (m.rows() != m.cols()) out["cols"] = m.cols();
  return out;
}

inline Json vector_to_json(const Vector& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Matrix matrix_from_json(const Json& j, const std::string& what = "matrix") {
  try {
    const Index n = j.at("n").get<Index>();
    const Index cols = j.contains("cols") ? j.at("cols").get<Index>() : n;
    const Json& rows = j.at("rows");
    if (n < 0 || cols < 0 || static_cast<Index>(rows.size()) != n)
      throw Error(ErrorKind::DimensionMismatch, what + ": row count does not match n");
    Matrix m(n, cols);
    for (Index i = 0; i < n; ++i) {
      const Json& row = rows.at(static_cast<std::size_t>(i));
      if (static_cast<Index>(row.size()) != cols)
        throw Error(ErrorKind::DimensionMismatch, what + ": row " + std::to_string(i) + " has wrong length");
      for (Index c = 0; c < cols; ++c) m(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
    return m;
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::Io, what + ": " + e.what());
  }
}

inline JointGaussianModel model_from_json(const Json& j) {
  auto mat = [&](const char* key) { return matrix_from_json(j.at(key), key); };
  try {
    const Index nz = j.value("n_z", Index{0});
    const Matrix sx = mat("Sigma_x"), sy = mat("Sigma_y"), sxy = mat("Sigma_xy");
    if (j.contains("n_x") && j.at("n_x").get<Index>() != sx.rows())
      throw Error(ErrorKind::DimensionMismatch, "n_x does not match Sigma_x");
    if (j.contains("n_y") && j.at("n_y").get<Index>() != sy.rows())
      throw Error(ErrorKind::DimensionMismatch, "n_y does not match Sigma_y");
    if (nz == 0 || !j.contains("Sigma_z")) return JointGaussianModel(sx, sy, sxy);
    const Matrix sz = mat("Sigma_z");
    if (sz.rows() != nz) throw Error(ErrorKind::DimensionMismatch, "n_z does not match Sigma_z");
    return JointGaussianModel(sx, sy, sxy, sz, mat("Sigma_xz"), mat("Sigma_yz"));
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::Io, std::string("model: ") + e.what());
  }
}

inline Json model_to_json(const JointGaussianModel& m) {
  Json j = {{"n_x", m.n_x()},
            {"n_y", m.n_y()},
            {"n_z", m.n_z()},
            {"Sigma_x", matrix_to_json(m.Sigma_x())},
            {"Sigma_y", matrix_to_json(m.Sigma_y())},
            {"Sigma_xy", matrix_to_json(m.Sigma_xy())}};
  if (m.n_z() > 0) {
    j["Sigma_z"] = matrix_to_json(m.Sigma_z());
    j["Sigma_xz"] = matrix_to_json(m.Sigma_xz());
    j["Sigma_yz"] = matrix_to_json(m.Sigma_yz());
  }
  return j;
}

inline FusionNetwork network_from_json(const Json& j) {
  try {
    const Matrix sxd = matrix_from_json(j.at("Sigma_xd"), "Sigma_xd");
    if (j.contains("n") && j.at("n").get<Index>() != sxd.rows())
      throw Error(ErrorKind::DimensionMismatch, "n does not match Sigma_xd");
    std::vector<SensorNode> nodes;
    for (const Json& nd : j.at("nodes"))
      nodes.push_back({matrix_from_json(nd.at("W"), "W"), matrix_from_json(nd.at("Sigma_n"), "Sigma_n"),
                       nd.at("alpha").get<double>()});
    return FusionNetwork(sxd, std::move(nodes), j.at("R_nats").get<double>());
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::Io, std::string("network: ") + e.what());
  }
}

inline Json network_to_json(const FusionNetwork& net) {
  Json nodes = Json::array();
  for (const SensorNode& nd : net.nodes())
    nodes.push_back({{"W", matrix_to_json(nd.W)}, {"Sigma_n", matrix_to_json(nd.Sigma_n)}, {"alpha", nd.alpha}});
  return {{"n", net.n()}, {"Sigma_xd", matrix_to_json(net.Sigma_xd())}, {"R_nats", net.R()}, {"nodes", nodes}};
}

inline Allocation allocation_from_json(const Json& j) {
  try {
    Allocation a;
    for (const Json& d : j.at("D")) a.D.push_back(matrix_from_json(d, "D"));
    return a;
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::Io, std::string("allocation: ") + e.what());
  }
}

inline Json allocation_to_json(const Allocation& a) {
  Json ds = Json::array();
  for (const Matrix& d : a.D) ds.push_back(matrix_to_json(d));
  return {{"D", ds}};
}

/// Real number with 17 significant digits; non-finite values become null.
inline std::string format_real(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {
inline void dump_json(const Json& j, std::string& out, int indent, int depth) {
  const auto newline = [&](int d) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        out += Json(it.key()).dump();
        out += indent < 0 ? ":" : ": ";
        dump_json(it.value(), out, indent, depth + 1);
      }
      newline(depth);
      out += '}';
      return;
    }
    case Json::value_t::array: {
      out += '[';
      bool scalar_row = std::all_of(j.begin(), j.end(), [](const Json& e) { return e.is_primitive(); });
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += scalar_row && indent >= 0 ? ", " : ",";
        if (!scalar_row) newline(depth + 1);
        dump_json(j[i], out, indent, depth + 1);
      }
      if (!scalar_row && !j.empty()) newline(depth);
      out += ']';
      return;
    }
    case Json::value_t::number_float:
      out += format_real(j.get<double>());
      return;
    default:
      out += j.dump();
  }
}
}  // namespace detail

/// Serializes with reals at 17 significant digits; indent < 0 gives one line.
inline std::string dump_json(const Json& j, int indent = 2) {
  std::string out;
  detail::dump_json(j, out, indent, 0);
  return out;
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::Io, path + ": " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path);
}

}  // namespace covrate
