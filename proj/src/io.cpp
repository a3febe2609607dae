#include "openfluid/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace openfluid {

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
    out << content;
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("cannot rename " + tmp + " to " + path);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::vector<std::string> snapshot_columns(const ModelSpec& model, const Grid& g) {
  std::vector<std::string> cols;
  cols.push_back("x");
  if (g.dim == 2) cols.push_back("y");
  cols.push_back("u_x");
  if (g.dim == 2) cols.push_back("u_y");
  for (int k = 0; k < model.n_components(); ++k)
    cols.push_back(k == 0 ? "rho" : "rho_" + std::to_string(k + 1));
  cols.push_back("s");
  if (model.has_tensor()) {
    const int nt = n_components(model.tensor->rank, g.dim);
    for (int c = 0; c < nt; ++c) cols.push_back("tensor_" + std::to_string(c));
  }
  return cols;
}

std::vector<double> snapshot_row(const ModelSpec& model, const State& st, int i, int j) {
  const Grid& g = *st.grid;
  const int cell = g.flat(i, j);
  std::vector<double> row;
  row.push_back(g.cell_x(i));
  if (g.dim == 2) row.push_back(g.cell_y(j));
  row.push_back(st.u.comp[0](cell));
  if (g.dim == 2) row.push_back(st.u.comp[1](cell));
  for (const auto& r : st.rho) row.push_back(r.comp[0](cell));
  row.push_back(st.s.comp[0](cell));
  if (st.tensor)
    for (int c = 0; c < st.tensor->n_comp(); ++c) row.push_back(st.tensor->comp[c](cell));
  return row;
}

}  // namespace

void write_snapshot_csv(const std::string& path, const ModelSpec& model, const State& st) {
  const Grid& g = *st.grid;
  std::ostringstream out;
  const auto cols = snapshot_columns(model, g);
  for (size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
  out << "\n";
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      const auto row = snapshot_row(model, st, i, j);
      for (size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << format_double(row[c]);
      out << "\n";
    }
  write_file_atomic(path, out.str());
}

void write_snapshot_binary(const std::string& path, const ModelSpec& model, const State& st) {
  const Grid& g = *st.grid;
  std::string buf;
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      const auto row = snapshot_row(model, st, i, j);
      for (double v : row) {
        char b[sizeof(double)];
        std::memcpy(b, &v, sizeof(double));
        buf.append(b, sizeof(double));
      }
    }
  write_file_atomic(path, buf);
}

State read_snapshot_csv(const std::string& path, const ModelSpec& model, GridPtr grid) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open snapshot " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty snapshot " + path);

  State st = State::zeros(grid, model);
  const Grid& g = *grid;
  int count = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
    const int j = count / g.nx();
    const int i = count % g.nx();
    const int cell = g.flat(i, j);
    size_t c = g.dim == 2 ? 2 : 1;  // skip coordinates
    st.u.comp[0](cell) = vals[c++];
    if (g.dim == 2) st.u.comp[1](cell) = vals[c++];
    for (auto& r : st.rho) r.comp[0](cell) = vals[c++];
    st.s.comp[0](cell) = vals[c++];
    if (st.tensor)
      for (int cc = 0; cc < st.tensor->n_comp(); ++cc) st.tensor->comp[cc](cell) = vals[c++];
    ++count;
  }
  if (count != g.n_cells())
    throw std::runtime_error("snapshot " + path + " has wrong cell count");
  return st;
}

}  // namespace openfluid
