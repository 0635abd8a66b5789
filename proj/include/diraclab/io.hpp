#pragma once

#include <iosfwd>
#include <string>

#include "diraclab/field.hpp"

namespace diraclab {

// Field dump layout: one ASCII header line
//   # diraclab-field v1 kind=<complex4|real8> n=<n> L=<L> encoding=<csv|binary-f64le> layout=site-major,component-minor
// followed by the site-major, component-minor values. CSV rows are
//   site,ix,iy,iz,<values...>
// where complex components contribute (re, im) pairs. The binary body is the
// same value sequence as little-endian doubles, without indices.

enum class FieldEncoding { csv, binary };

void write_field(std::ostream& out, const ComplexSpinorField& f, FieldEncoding enc);
void write_field(std::ostream& out, const RealSpinorField& f, FieldEncoding enc);
ComplexSpinorField read_complex_field(std::istream& in);
RealSpinorField read_real_field(std::istream& in);

void save_field(const std::string& path, const ComplexSpinorField& f, FieldEncoding enc);
void save_field(const std::string& path, const RealSpinorField& f, FieldEncoding enc);
ComplexSpinorField load_complex_field(const std::string& path);
RealSpinorField load_real_field(const std::string& path);

}  // namespace diraclab
