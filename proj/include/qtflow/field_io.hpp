#pragma once

#include <iosfwd>
#include <string>

#include "qtflow/grid.hpp"

namespace qtflow {

/// Full-precision decimal rendering (17 significant digits): parsing the
/// string back yields the identical double.
std::string format_g17(double x);

/// Field snapshot format: one header line
///   qfield v1 dim=<d> n=<n1[,n2[,n3]]> h=<h1[,...]> bc=<dirichlet|neumann>
/// (n = cells per axis) followed by one line per node in row-major order
/// with 5 values (tensor) or 1 value (scalar), 17 significant digits.
void write_field(std::ostream& os, const QTensorField& f);
void write_field(std::ostream& os, const ScalarField& f);
void save_field(const std::string& path, const QTensorField& f);
void save_field(const std::string& path, const ScalarField& f);

/// Readers validate the header and value count; ParseError on anything
/// malformed. Grid extents are reconstructed as h * n per axis.
QTensorField read_qtensor_field(std::istream& is);
ScalarField read_scalar_field(std::istream& is);
QTensorField load_qtensor_field(const std::string& path);
ScalarField load_scalar_field(const std::string& path);

}  // namespace qtflow
