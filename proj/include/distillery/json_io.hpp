#pragma once

// JSON encoding of states and channels. Matrices are arrays of rows, each
// entry a [re, im] pair. Reals are written in 17-significant-digit
// scientific notation, which round-trips doubles exactly.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "distillery/locc.hpp"
#include "distillery/qstate.hpp"

namespace distillery {

using Json = nlohmann::ordered_json;

/// Scientific notation with `significant` digits, e.g. 7.0000000000000000e-01.
inline std::string format_real(double v, int significant) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*e", significant - 1, v);
  return buf;
}

namespace detail {

inline void write_json(const Json& j, std::string& out) {
  switch (j.type()) {
    case Json::value_t::number_float: out += format_real(j.get<double>(), 17); break;
    case Json::value_t::array: {
      out += '[';
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += ',';
        first = false;
        write_json(e, out);
      }
      out += ']';
      break;
    }
    case Json::value_t::object: {
      out += '{';
      bool first = true;
      for (const auto& [k, v] : j.items()) {
        if (!first) out += ',';
        first = false;
        out += Json(k).dump();
        out += ':';
        write_json(v, out);
      }
      out += '}';
      break;
    }
    default: out += j.dump(); break;
  }
}

}  // namespace detail

/// Compact single-line dump with fixed real formatting.
inline std::string dump_json(const Json& j) {
  std::string out;
  detail::write_json(j, out);
  return out;
}

inline Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(Json::array({m(i, j).real(), m(i, j).imag()}));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const Json& j) {
  require(j.is_array() && !j.empty(), ErrorCode::parse_error, "matrix must be a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  require(j[0].is_array() && !j[0].empty(), ErrorCode::parse_error, "matrix rows must be non-empty arrays");
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    require(row.is_array() && static_cast<Eigen::Index>(row.size()) == cols, ErrorCode::parse_error,
            "matrix rows must all have the same length");
    for (Eigen::Index k = 0; k < cols; ++k) {
      const auto& e = row[static_cast<std::size_t>(k)];
      require(e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number(), ErrorCode::parse_error,
              "matrix entries must be [re, im] number pairs");
      m(i, k) = Complex(e[0].get<double>(), e[1].get<double>());
    }
  }
  return m;
}

inline Json to_json(const DensityOperator& rho) {
  Json j;
  j["dim_a"] = rho.dim_a();
  j["dim_b"] = rho.dim_b();
  j["matrix"] = matrix_to_json(rho.matrix());
  return j;
}

inline DensityOperator density_from_json(const Json& j) {
  require(j.is_object() && j.contains("dim_a") && j.contains("dim_b") && j.contains("matrix"), ErrorCode::parse_error,
          "state JSON needs dim_a, dim_b and matrix");
  require(j["dim_a"].is_number_unsigned() && j["dim_b"].is_number_unsigned(), ErrorCode::parse_error,
          "dim_a and dim_b must be positive integers");
  const auto da = j["dim_a"].get<std::size_t>();
  const auto db = j["dim_b"].get<std::size_t>();
  require(da >= 1 && db >= 1, ErrorCode::parse_error, "dim_a and dim_b must be positive integers");
  detail::check_dimension_cap(da, db);
  return DensityOperator(da, db, matrix_from_json(j["matrix"]));
}

inline Json to_json(const KrausChannel& ch) {
  Json j;
  j["dim_in"] = Json::array({ch.in_dims().a, ch.in_dims().b});
  j["dim_out"] = Json::array({ch.out_dims().a, ch.out_dims().b});
  j["product_form"] = ch.product_form();
  j["provenance"] = ch.provenance();
  Json ops = Json::array();
  for (const auto& k : ch.kraus_ops()) ops.push_back(matrix_to_json(k));
  j["kraus"] = std::move(ops);
  return j;
}

inline KrausChannel channel_from_json(const Json& j) {
  require(j.is_object() && j.contains("dim_in") && j.contains("dim_out") && j.contains("kraus"), ErrorCode::parse_error,
          "channel JSON needs dim_in, dim_out and kraus");
  auto dims = [](const Json& d) {
    require(d.is_array() && d.size() == 2 && d[0].is_number_unsigned() && d[1].is_number_unsigned(),
            ErrorCode::parse_error, "dimensions must be [a, b]");
    return LocalDims{d[0].get<std::size_t>(), d[1].get<std::size_t>()};
  };
  std::vector<Matrix> ops;
  require(j["kraus"].is_array(), ErrorCode::parse_error, "kraus must be an array of matrices");
  for (const auto& k : j["kraus"]) ops.push_back(matrix_from_json(k));
  return KrausChannel(std::move(ops), dims(j["dim_in"]), dims(j["dim_out"]), j.value("product_form", false),
                      j.value("provenance", std::string{}));
}

inline Json parse_json_text(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::parse_error, std::string("malformed JSON: ") + e.what());
  }
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::io_error, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::io_error, "cannot write " + path);
  out << text;
  require(static_cast<bool>(out), ErrorCode::io_error, "write failed for " + path);
}

inline DensityOperator read_state_file(const std::string& path) {
  return density_from_json(parse_json_text(read_text_file(path)));
}

}  // namespace distillery
