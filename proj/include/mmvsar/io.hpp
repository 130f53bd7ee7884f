#pragma once

#include "mmvsar/resolution.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace mmvsar {

using Json = nlohmann::ordered_json;

// Shortest round-trippable decimal form, locale independent.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// One line per matrix row; entries are "re,im" pairs separated by ';'.
// An optional leading '#' comment carries provenance.
inline void write_complex_matrix_csv(const std::filesystem::path& path, const CMatrix& m,
                                     const std::string& preamble = "") {
  std::ofstream out(path);
  require(out.good(), "cannot open " + path.string());
  if (!preamble.empty()) out << preamble << '\n';
  for (Eigen::Index j = 0; j < m.rows(); ++j) {
    for (Eigen::Index v = 0; v < m.cols(); ++v) {
      if (v) out << ';';
      out << format_double(m(j, v).real()) << ',' << format_double(m(j, v).imag());
    }
    out << '\n';
  }
}

// Generic table writer: optional '#' preamble, header row, stringified cells.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns,
            const std::string& preamble = "")
      : out_(path) {
    require(out_.good(), "cannot open " + path.string());
    if (!preamble.empty()) out_ << preamble << '\n';
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (i) out_ << ',';
      out_ << columns[i];
    }
    out_ << '\n';
    width_ = columns.size();
  }

  void row(const std::vector<std::string>& cells) {
    require(cells.size() == width_, "csv row width mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
  std::size_t width_ = 0;
};

inline std::string cell(double v) { return format_double(v); }
inline std::string cell(int v) { return std::to_string(v); }
inline std::string cell(bool v) { return v ? "1" : "0"; }

inline Json to_json(const BoundReport& b) {
  Json j;
  j["name"] = b.name;
  j["lhs"] = b.lhs;
  j["rhs"] = b.rhs;
  j["satisfied"] = b.satisfied;
  j["applicable"] = b.applicable;
  if (!b.context.empty()) j["context"] = b.context;
  return j;
}

inline Json to_json(const InteractionReport& rep) {
  Json j;
  j["i1"] = rep.i1;
  j["i_nv"] = rep.i_nv;
  j["argmax"] = rep.argmax;
  j["inv_is_lower_bound"] = rep.inv_is_lower_bound;
  return j;
}

inline Json to_json(const SolverResult& res) {
  Json j;
  j["objective"] = res.objective;
  j["feasibility_residual"] = res.feasibility_residual;
  j["optimality_residual"] = res.optimality_residual;
  j["tau"] = res.tau;
  j["iterations"] = res.iterations;
  j["converged"] = res.converged;
  return j;
}

inline void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  require(out.good(), "cannot open " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace mmvsar
