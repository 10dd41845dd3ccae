#include "json_io.hpp"

#include <fstream>
#include <sstream>

#include "h2mm/errors.hpp"

namespace h2mm::cli {

namespace {

Error parse_error(const std::string& what) {
  return Error(ErrorCode::kParseError, what);
}

}  // namespace

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, const std::string& name, int rows,
                        int cols) {
  if (!j.is_array()) throw parse_error(name + " must be an array of rows");
  const int r = static_cast<int>(j.size());
  int c = cols;
  if (r > 0) {
    if (!j[0].is_array()) throw parse_error(name + " must be an array of rows");
    c = static_cast<int>(j[0].size());
  } else if (c < 0) {
    c = 0;
  }
  if ((rows >= 0 && r != rows) || (cols >= 0 && c != cols)) {
    throw Error(ErrorCode::kDimensionMismatch,
                name + " is " + std::to_string(r) + "x" + std::to_string(c) +
                    ", expected " + std::to_string(rows) + "x" +
                    std::to_string(cols));
  }
  Matrix m(r, c);
  for (int i = 0; i < r; ++i) {
    if (!j[i].is_array() || static_cast<int>(j[i].size()) != c) {
      throw parse_error(name + " has ragged rows");
    }
    for (int k = 0; k < c; ++k) {
      if (!j[i][k].is_number()) throw parse_error(name + " has non-numeric entries");
      m(i, k) = j[i][k].get<double>();
    }
  }
  return m;
}

json complex_list(const CVector& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back({v(i).real(), v(i).imag()});
  return out;
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw parse_error(path + ": " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot open " + path);
  out << text;
  out.flush();
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + path);
}

void write_json(const std::string& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

LtiSystem system_from_json(const json& j) {
  try {
    const int n = j.at("n").get<int>();
    const int m = j.at("m").get<int>();
    const int p = j.at("p").get<int>();
    if (n < 1 || m < 1 || p < 1) throw parse_error("n, m, p must be positive");
    return LtiSystem(matrix_from_json(j.at("A"), "A", n, n),
                     matrix_from_json(j.at("B"), "B", n, m),
                     matrix_from_json(j.at("C"), "C", p, n));
  } catch (const json::exception& e) {
    throw parse_error(std::string("system file: ") + e.what());
  }
}

LtiSystem load_system(const std::string& path) {
  return system_from_json(read_json(path));
}

ModelFile load_model(const std::string& path) {
  const json j = read_json(path);
  ModelFile f;
  try {
    f.model.F = matrix_from_json(j.at("F"), "F");
    const int nu = static_cast<int>(f.model.F.rows());
    if (f.model.F.cols() != nu) {
      throw Error(ErrorCode::kDimensionMismatch, "F must be square");
    }
    f.model.G = matrix_from_json(j.at("G"), "G", nu);
    f.model.H = matrix_from_json(j.at("H"), "H", -1, nu);
    if (j.contains("provenance")) {
      const json& pv = j.at("provenance");
      if (pv.contains("S")) f.S = matrix_from_json(pv.at("S"), "S", nu, nu);
      if (pv.contains("L")) f.L = matrix_from_json(pv.at("L"), "L", -1, nu);
      if (pv.contains("Pi")) f.Pi = matrix_from_json(pv.at("Pi"), "Pi", -1, nu);
      if (pv.contains("points")) {
        const json& pts = pv.at("points");
        CVector v(static_cast<int>(pts.size()));
        for (size_t i = 0; i < pts.size(); ++i) {
          v(static_cast<int>(i)) =
              Complex(pts[i].at(0).get<double>(), pts[i].at(1).get<double>());
        }
        f.points = v;
      }
      if (pv.contains("mode")) f.mode = pv.at("mode").get<std::string>();
    }
  } catch (const json::exception& e) {
    throw parse_error(path + ": " + e.what());
  }
  f.model.stable = spectrum(f.model.F).is_stable;
  return f;
}

json model_to_json(const ModelFile& f) {
  json j;
  j["F"] = matrix_to_json(f.model.F);
  j["G"] = matrix_to_json(f.model.G);
  j["H"] = matrix_to_json(f.model.H);
  json pv = json::object();
  if (f.S) pv["S"] = matrix_to_json(*f.S);
  if (f.L) pv["L"] = matrix_to_json(*f.L);
  if (f.Pi) pv["Pi"] = matrix_to_json(*f.Pi);
  if (f.points) pv["points"] = complex_list(*f.points);
  if (!f.mode.empty()) pv["mode"] = f.mode;
  if (!pv.empty()) j["provenance"] = pv;
  return j;
}

}  // namespace h2mm::cli
