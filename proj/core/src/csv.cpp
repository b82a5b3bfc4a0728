#include "gradplast/csv.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace gradplast {

std::string csv_number(double v) {
  if (std::isnan(v)) return "n/a";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void write_ledger_csv(std::ostream& out, const std::vector<LedgerRow>& rows) {
  const auto& names = ledger_column_names();
  for (std::size_t k = 0; k < kLedgerColumns; ++k) {
    if (k) out << ',';
    out << names[k];
  }
  out << '\n';
  for (const LedgerRow& r : rows) {
    const auto vals = ledger_row_values(r);
    for (std::size_t k = 0; k < kLedgerColumns; ++k) {
      if (k) out << ',';
      out << csv_number(vals[k]);
    }
    out << '\n';
  }
}

namespace {

void write_node_prefix(std::ostream& out, const Grid& g, std::size_t n) {
  auto c = g.coords(n);
  auto x = g.position(c[0], c[1], c[2]);
  out << n << ',' << csv_number(x[0]) << ',' << csv_number(x[1]) << ',' << csv_number(x[2]);
}

}  // namespace

void write_matrix_field_csv(std::ostream& out, const Grid& g, const MatrixField& f) {
  out << "node,x,y,z,m00,m01,m02,m10,m11,m12,m20,m21,m22\n";
  for (std::size_t n = 0; n < g.node_count(); ++n) {
    write_node_prefix(out, g, n);
    for (int i = 0; i < 9; ++i) out << ',' << csv_number(f(n, i));
    out << '\n';
  }
}

void write_state_field_csv(std::ostream& out, const Grid& g, const StateField& f) {
  out << "node,x,y,z,p00,p01,p02,p10,p11,p12,p20,p21,p22,gamma\n";
  for (std::size_t n = 0; n < g.node_count(); ++n) {
    write_node_prefix(out, g, n);
    for (int i = 0; i < 10; ++i) out << ',' << csv_number(f(n, i));
    out << '\n';
  }
}

void write_vector_field_csv(std::ostream& out, const Grid& g, const VectorField& f) {
  out << "node,x,y,z,v0,v1,v2\n";
  for (std::size_t n = 0; n < g.node_count(); ++n) {
    write_node_prefix(out, g, n);
    for (int i = 0; i < 3; ++i) out << ',' << csv_number(f(n, i));
    out << '\n';
  }
}

void write_convergence_csv(std::ostream& out, const ConvergenceTable& table) {
  out << "kind,index,parameter,difference\n";
  for (std::size_t k = 0; k < table.time_differences.size(); ++k) {
    out << "time," << k << ',' << csv_number(static_cast<double>(table.step_counts[k + 1]))
        << ',' << csv_number(table.time_differences[k]) << '\n';
  }
  for (std::size_t k = 0; k < table.eps_differences.size(); ++k) {
    out << "eps," << k << ',' << csv_number(table.eps_values[k + 1]) << ','
        << csv_number(table.eps_differences[k]) << '\n';
  }
}

void write_korn_csv(std::ostream& out, const KornStatistics& st) {
  out << "samples,rejected,max_ratio,mean_ratio,max_ratio_optimized,degenerate_found\n";
  out << st.samples << ',' << st.rejected << ',' << csv_number(st.max_ratio) << ','
      << csv_number(st.mean_ratio) << ',' << csv_number(st.max_ratio_optimized) << ','
      << (st.degenerate_found ? 1 : 0) << '\n';
}

void write_vtk_tensor(std::ostream& out, const Grid& g, const MatrixField& f,
                      const std::string& name) {
  out << "# vtk DataFile Version 3.0\n"
      << name << "\n"
      << "ASCII\n"
      << "DATASET STRUCTURED_POINTS\n"
      << "DIMENSIONS " << g.nx() << ' ' << g.ny() << ' ' << g.nz() << "\n"
      << "ORIGIN " << csv_number(g.origin()[0]) << ' ' << csv_number(g.origin()[1]) << ' '
      << csv_number(g.origin()[2]) << "\n"
      << "SPACING " << csv_number(g.spacing(0)) << ' ' << csv_number(g.spacing(1)) << ' '
      << csv_number(g.spacing(2)) << "\n"
      << "POINT_DATA " << g.node_count() << "\n"
      << "TENSORS " << name << " double\n";
  // VTK structured points iterate x fastest; emit in that order
  for (std::size_t k = 0; k < g.nz(); ++k)
    for (std::size_t j = 0; j < g.ny(); ++j)
      for (std::size_t i = 0; i < g.nx(); ++i) {
        const std::size_t n = g.index(i, j, k);
        for (int row = 0; row < 3; ++row) {
          out << csv_number(f(n, 3 * row)) << ' ' << csv_number(f(n, 3 * row + 1)) << ' '
              << csv_number(f(n, 3 * row + 2)) << '\n';
        }
        out << '\n';
      }
}

}  // namespace gradplast
