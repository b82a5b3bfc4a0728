#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "gradplast/diagnostics.hpp"
#include "gradplast/fields.hpp"
#include "gradplast/grid.hpp"

namespace gradplast {

/// Full-precision decimal rendering (17 significant digits, '.' separator).
/// NaN serializes as "n/a": the ledger uses it for columns a rule cannot
/// certify.
std::string csv_number(double v);

/// RFC-4180 quoting: wraps in double quotes when the value contains a
/// comma, quote, or line break; embedded quotes are doubled.
std::string csv_quote(const std::string& s);

void write_ledger_csv(std::ostream& out, const std::vector<LedgerRow>& rows);

/// Flat node table: node,x,y,z followed by the component columns.
void write_matrix_field_csv(std::ostream& out, const Grid& g, const MatrixField& f);
void write_state_field_csv(std::ostream& out, const Grid& g, const StateField& f);
void write_vector_field_csv(std::ostream& out, const Grid& g, const VectorField& f);

void write_convergence_csv(std::ostream& out, const ConvergenceTable& table);
void write_korn_csv(std::ostream& out, const KornStatistics& st);

/// Legacy-VTK structured-points tensor snapshot for external viewers.
void write_vtk_tensor(std::ostream& out, const Grid& g, const MatrixField& f,
                      const std::string& name);

}  // namespace gradplast
