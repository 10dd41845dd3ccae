#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <tuple>

#include "h2mm/errors.hpp"
#include "h2mm/sdp_relaxation.hpp"

namespace h2mm {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string to_sdpa(const SdpProblem& problem) {
  const SdpProblem p = problem.canonical();
  std::ostringstream os;
  os << p.num_vars << "\n" << p.blocks.size() << "\n";
  for (size_t k = 0; k < p.blocks.size(); ++k) {
    const SdpBlock& b = p.blocks[k];
    os << (k ? " " : "") << (b.diagonal ? -b.dim : b.dim);
  }
  os << "\n";
  for (int i = 0; i < p.num_vars; ++i) {
    os << (i ? " " : "") << fmt(p.objective(i));
  }
  os << "\n";
  // F_0 = -G_0 so that sum_i y_i F_i - F_0 = G_0 + sum_i y_i G_i.
  std::vector<std::tuple<int, int, int, int, double>> rows;
  for (size_t k = 0; k < p.blocks.size(); ++k) {
    for (const SdpEntry& e : p.blocks[k].entries) {
      const double v = e.var == 0 ? -e.value : e.value;
      if (v == 0.0) continue;
      rows.emplace_back(e.var, static_cast<int>(k), e.row, e.col, v);
    }
  }
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return std::make_tuple(std::get<0>(a), std::get<1>(a), std::get<2>(a),
                           std::get<3>(a)) <
           std::make_tuple(std::get<0>(b), std::get<1>(b), std::get<2>(b),
                           std::get<3>(b));
  });
  for (const auto& [var, blk, r, c, v] : rows) {
    os << var << " " << blk + 1 << " " << r + 1 << " " << c + 1 << " "
       << fmt(v) << "\n";
  }
  return os.str();
}

void export_sdpa(const SdpProblem& problem, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot open " + path);
  out << to_sdpa(problem);
  out.flush();
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + path);
}

SdpProblem parse_sdpa(const std::string& text) {
  std::string body;
  {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && (line[0] == '"' || line[0] == '*')) continue;
      for (char& ch : line) {
        if (ch == ',' || ch == '{' || ch == '}' || ch == '(' || ch == ')') {
          ch = ' ';
        }
      }
      body += line;
      body += '\n';
    }
  }
  std::istringstream in(body);
  auto fail = [](const std::string& what) {
    return Error(ErrorCode::kParseError, "SDPA: " + what);
  };
  SdpProblem p;
  int nblocks = 0;
  if (!(in >> p.num_vars) || p.num_vars < 0) throw fail("bad variable count");
  if (!(in >> nblocks) || nblocks < 0) throw fail("bad block count");
  for (int k = 0; k < nblocks; ++k) {
    int size = 0;
    if (!(in >> size) || size == 0) throw fail("bad block size");
    SdpBlock b;
    b.dim = std::abs(size);
    b.diagonal = size < 0;
    p.blocks.push_back(b);
  }
  p.objective.resize(p.num_vars);
  for (int i = 0; i < p.num_vars; ++i) {
    if (!(in >> p.objective(i))) throw fail("bad objective");
  }
  int var = 0, blk = 0, r = 0, c = 0;
  double v = 0.0;
  while (in >> var) {
    if (!(in >> blk >> r >> c >> v)) throw fail("truncated entry");
    if (var < 0 || var > p.num_vars || blk < 1 || blk > nblocks) {
      throw fail("entry index out of range");
    }
    SdpBlock& b = p.blocks[blk - 1];
    if (r < 1 || c < 1 || r > b.dim || c > b.dim) {
      throw fail("entry position out of range");
    }
    if (r > c) std::swap(r, c);
    if (b.diagonal && r != c) throw fail("off-diagonal entry in diagonal block");
    b.entries.push_back({var, r - 1, c - 1, var == 0 ? -v : v});
  }
  if (!in.eof()) throw fail("unexpected token");
  for (SdpBlock& b : p.blocks) {
    std::stable_sort(b.entries.begin(), b.entries.end(),
                     [](const SdpEntry& a, const SdpEntry& e) {
                       return std::tie(a.var, a.row, a.col) <
                              std::tie(e.var, e.row, e.col);
                     });
  }
  return p;
}

SdpProblem read_sdpa(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_sdpa(ss.str());
}

}  // namespace h2mm
