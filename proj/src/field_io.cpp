#include "qtflow/field_io.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <vector>

#include "qtflow/errors.hpp"

namespace qtflow {

std::string format_g17(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace {

void write_header(std::ostream& os, const Grid& g) {
    os << "qfield v1 dim=" << g.dim << " n=";
    for (int a = 0; a < g.dim; ++a)
        os << (a ? "," : "") << g.cells[a];
    os << " h=";
    for (int a = 0; a < g.dim; ++a)
        os << (a ? "," : "") << format_g17(g.h(a));
    os << " bc="
       << (g.bc == Bc::DirichletZero ? "dirichlet" : "neumann") << '\n';
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

Grid parse_header(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) {
        throw ParseError(1, "", "empty field file");
    }
    std::istringstream ss(line);
    std::string magic, version;
    ss >> magic >> version;
    if (magic != "qfield" || version != "v1") {
        throw ParseError(1, "", "not a 'qfield v1' file");
    }

    Grid g;
    bool have_dim = false, have_n = false, have_h = false, have_bc = false;
    std::vector<int> ns;
    std::vector<double> hs;
    std::string tok;
    while (ss >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) {
            throw ParseError(1, tok, "expected key=value in header");
        }
        const std::string key = tok.substr(0, eq);
        const std::string value = tok.substr(eq + 1);
        try {
            if (key == "dim") {
                g.dim = std::stoi(value);
                have_dim = true;
            } else if (key == "n") {
                for (const std::string& part : split_commas(value))
                    ns.push_back(std::stoi(part));
                have_n = true;
            } else if (key == "h") {
                for (const std::string& part : split_commas(value))
                    hs.push_back(std::stod(part));
                have_h = true;
            } else if (key == "bc") {
                if (value == "dirichlet") {
                    g.bc = Bc::DirichletZero;
                } else if (value == "neumann") {
                    g.bc = Bc::NeumannZero;
                } else {
                    throw ParseError(1, "bc",
                                     "expected 'dirichlet' or 'neumann'");
                }
                have_bc = true;
            } else {
                throw ParseError(1, key, "unknown header key");
            }
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception&) {
            throw ParseError(1, key, "malformed value '" + value + "'");
        }
    }
    if (!have_dim || !have_n || !have_h || !have_bc) {
        throw ParseError(1, "", "header must set dim, n, h and bc");
    }
    if (g.dim < 1 || g.dim > 3) {
        throw ParseError(1, "dim", "dim must be 1, 2 or 3");
    }
    if (ns.size() != static_cast<std::size_t>(g.dim) ||
        hs.size() != static_cast<std::size_t>(g.dim)) {
        throw ParseError(1, "n", "n and h must list one entry per axis");
    }
    for (int a = 0; a < g.dim; ++a) {
        if (ns[static_cast<std::size_t>(a)] < 1) {
            throw ParseError(1, "n", "cell counts must be >= 1");
        }
        if (!(hs[static_cast<std::size_t>(a)] > 0.0)) {
            throw ParseError(1, "h", "spacings must be positive");
        }
        g.cells[a] = ns[static_cast<std::size_t>(a)];
        g.extent[a] = hs[static_cast<std::size_t>(a)] *
                      static_cast<double>(g.cells[a]);
    }
    return g;
}

// Reads exactly `per_node` doubles per node; written one node per line,
// but the reader is whitespace-agnostic and reports the node index.
void read_values(std::istream& is, std::size_t count, std::size_t per_node,
                 double* out) {
    for (std::size_t i = 0; i < count * per_node; ++i) {
        if (!(is >> out[i])) {
            throw ParseError(2 + static_cast<long>(i / per_node),
                             "node " + std::to_string(i / per_node),
                             "missing or malformed value");
        }
    }
    double extra;
    if (is >> extra) {
        throw ParseError(0, "", "trailing data after the last node");
    }
}

}  // namespace

void write_field(std::ostream& os, const QTensorField& f) {
    write_header(os, f.grid);
    for (const QTensor& q : f.v) {
        os << format_g17(q.q11) << ' ' << format_g17(q.q12) << ' '
           << format_g17(q.q13) << ' ' << format_g17(q.q22) << ' '
           << format_g17(q.q23) << '\n';
    }
}

void write_field(std::ostream& os, const ScalarField& f) {
    write_header(os, f.grid);
    for (double x : f.v) os << format_g17(x) << '\n';
}

void save_field(const std::string& path, const QTensorField& f) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    write_field(os, f);
}

void save_field(const std::string& path, const ScalarField& f) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    write_field(os, f);
}

QTensorField read_qtensor_field(std::istream& is) {
    const Grid g = parse_header(is);
    QTensorField f(g);
    std::vector<double> buf(f.size() * 5);
    read_values(is, f.size(), 5, buf.data());
    for (std::size_t i = 0; i < f.size(); ++i) {
        f.v[i] = {buf[5 * i], buf[5 * i + 1], buf[5 * i + 2], buf[5 * i + 3],
                  buf[5 * i + 4]};
    }
    return f;
}

ScalarField read_scalar_field(std::istream& is) {
    const Grid g = parse_header(is);
    ScalarField f(g);
    read_values(is, f.size(), 1, f.v.data());
    return f;
}

QTensorField load_qtensor_field(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    return read_qtensor_field(is);
}

ScalarField load_scalar_field(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    return read_scalar_field(is);
}

}  // namespace qtflow
