#include "diraclab/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <vector>

#include "diraclab/errors.hpp"

namespace diraclab {

namespace {

static_assert(std::endian::native == std::endian::little, "binary dumps assume a little-endian host");

struct Header {
    std::string kind;
    int n = 0;
    double extent = 0.0;
    FieldEncoding encoding = FieldEncoding::csv;
};

void write_header(std::ostream& out, const char* kind, const PeriodicGrid& g, FieldEncoding enc)
{
    out << "# diraclab-field v1 kind=" << kind << " n=" << g.n() << " L=" << std::setprecision(17) << g.extent()
        << " encoding=" << (enc == FieldEncoding::csv ? "csv" : "binary-f64le")
        << " layout=site-major,component-minor\n";
}

Header read_header(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || line.rfind("# diraclab-field v1", 0) != 0)
        throw ValidationError("field dump: missing or unsupported header");
    std::map<std::string, std::string> kv;
    std::istringstream ss(line.substr(std::strlen("# diraclab-field v1")));
    std::string token;
    while (ss >> token) {
        const auto eq = token.find('=');
        if (eq != std::string::npos) kv[token.substr(0, eq)] = token.substr(eq + 1);
    }
    Header h;
    try {
        h.kind = kv.at("kind");
        h.n = std::stoi(kv.at("n"));
        h.extent = std::stod(kv.at("L"));
        const std::string enc = kv.at("encoding");
        if (enc == "csv") h.encoding = FieldEncoding::csv;
        else if (enc == "binary-f64le") h.encoding = FieldEncoding::binary;
        else throw ValidationError("field dump: unknown encoding " + enc);
    } catch (const std::out_of_range&) {
        throw ValidationError("field dump: header lacks kind/n/L/encoding");
    }
    return h;
}

// values: site-major, component-minor flattened doubles.
void write_body(std::ostream& out, const PeriodicGrid& g, const std::vector<double>& values, int per_site,
                FieldEncoding enc, const std::string& columns)
{
    if (enc == FieldEncoding::binary) {
        out.write(reinterpret_cast<const char*>(values.data()),
                  static_cast<std::streamsize>(values.size() * sizeof(double)));
        return;
    }
    out << columns << '\n' << std::setprecision(17);
    for (std::size_t site = 0; site < g.size(); ++site) {
        const auto c = g.coords(site);
        out << site << ',' << c[0] << ',' << c[1] << ',' << c[2];
        for (int j = 0; j < per_site; ++j) out << ',' << values[site * per_site + j];
        out << '\n';
    }
}

std::vector<double> read_body(std::istream& in, const PeriodicGrid& g, int per_site, FieldEncoding enc)
{
    std::vector<double> values(g.size() * per_site);
    if (enc == FieldEncoding::binary) {
        in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
        if (!in) throw ValidationError("field dump: truncated binary body");
        return values;
    }
    std::string line;
    std::getline(in, line);  // column names
    for (std::size_t site = 0; site < g.size(); ++site) {
        if (!std::getline(in, line)) throw ValidationError("field dump: truncated CSV body");
        std::istringstream row(line);
        std::string cell;
        for (int skip = 0; skip < 4; ++skip) std::getline(row, cell, ',');
        for (int j = 0; j < per_site; ++j) {
            if (!std::getline(row, cell, ',')) throw ValidationError("field dump: short CSV row");
            values[site * per_site + j] = std::stod(cell);
        }
    }
    return values;
}

std::string column_names(const char* prefix_re, const char* prefix_im, int comps)
{
    std::string s = "site,ix,iy,iz";
    for (int c = 0; c < comps; ++c) {
        s += std::string(",") + prefix_re + std::to_string(c);
        if (prefix_im) s += std::string(",") + prefix_im + std::to_string(c);
    }
    return s;
}

}  // namespace

void write_field(std::ostream& out, const ComplexSpinorField& f, FieldEncoding enc)
{
    write_header(out, "complex4", f.grid(), enc);
    std::vector<double> v(f.sites() * 8);
    for (std::size_t site = 0; site < f.sites(); ++site)
        for (int c = 0; c < 4; ++c) {
            v[site * 8 + 2 * c] = f(c, site).real();
            v[site * 8 + 2 * c + 1] = f(c, site).imag();
        }
    write_body(out, f.grid(), v, 8, enc, column_names("re", "im", 4));
}

void write_field(std::ostream& out, const RealSpinorField& f, FieldEncoding enc)
{
    write_header(out, "real8", f.grid(), enc);
    std::vector<double> v(f.sites() * 8);
    for (std::size_t site = 0; site < f.sites(); ++site)
        for (int c = 0; c < 8; ++c) v[site * 8 + c] = f(c, site);
    write_body(out, f.grid(), v, 8, enc, column_names("r", nullptr, 8));
}

ComplexSpinorField read_complex_field(std::istream& in)
{
    const Header h = read_header(in);
    if (h.kind != "complex4") throw ValidationError("field dump: expected kind=complex4, got " + h.kind);
    ComplexSpinorField f(PeriodicGrid(h.n, h.extent));
    const auto v = read_body(in, f.grid(), 8, h.encoding);
    for (std::size_t site = 0; site < f.sites(); ++site)
        for (int c = 0; c < 4; ++c) f(c, site) = {v[site * 8 + 2 * c], v[site * 8 + 2 * c + 1]};
    return f;
}

RealSpinorField read_real_field(std::istream& in)
{
    const Header h = read_header(in);
    if (h.kind != "real8") throw ValidationError("field dump: expected kind=real8, got " + h.kind);
    RealSpinorField f(PeriodicGrid(h.n, h.extent));
    const auto v = read_body(in, f.grid(), 8, h.encoding);
    for (std::size_t site = 0; site < f.sites(); ++site)
        for (int c = 0; c < 8; ++c) f(c, site) = v[site * 8 + c];
    return f;
}

namespace {

template <class F>
void save_impl(const std::string& path, const F& f, FieldEncoding enc)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path + " for writing");
    write_field(out, f, enc);
}

std::ifstream open_in(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    return in;
}

}  // namespace

void save_field(const std::string& path, const ComplexSpinorField& f, FieldEncoding enc) { save_impl(path, f, enc); }
void save_field(const std::string& path, const RealSpinorField& f, FieldEncoding enc) { save_impl(path, f, enc); }

ComplexSpinorField load_complex_field(const std::string& path)
{
    auto in = open_in(path);
    return read_complex_field(in);
}

RealSpinorField load_real_field(const std::string& path)
{
    auto in = open_in(path);
    return read_real_field(in);
}

}  // namespace diraclab
