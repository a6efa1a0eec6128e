#include "qtflow/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "qtflow/errors.hpp"
#include "qtflow/field_io.hpp"
#include "qtflow/kernels.hpp"
#include "qtflow/rng.hpp"

namespace qtflow {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(trim(cur));
    return out;
}

struct RawEntry {
    long line = 0;
    std::string value;
};

/// Raw `section.key -> value` view of the text, plus typed getters that
/// raise ParseError with the original line number. Consumed keys are
/// tracked so leftovers (typos) can be reported.
class RawConfig {
public:
    explicit RawConfig(const std::string& text) {
        std::istringstream is(text);
        std::string line;
        std::string section;
        long lineno = 0;
        static const std::set<std::string> known_sections = {
            "grid", "model", "time", "initial", "solver", "output"};
        while (std::getline(is, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']') {
                    throw ParseError(lineno, "", "unterminated section header");
                }
                section = trim(line.substr(1, line.size() - 2));
                if (!known_sections.count(section)) {
                    throw ParseError(lineno, section, "unknown section");
                }
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw ParseError(lineno, "", "expected 'key = value'");
            }
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty()) {
                throw ParseError(lineno, "", "missing key before '='");
            }
            if (section.empty()) {
                throw ParseError(lineno, key,
                                 "key appears before any [section] header");
            }
            entries_[section + "." + key] = {lineno, value};
        }
    }

    bool has(const std::string& key) const { return entries_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& dflt) {
        const RawEntry* e = take(key);
        return e ? e->value : dflt;
    }

    double get_double(const std::string& key, double dflt) {
        const RawEntry* e = take(key);
        if (!e) return dflt;
        return to_double(*e, key);
    }

    long get_long(const std::string& key, long dflt) {
        const RawEntry* e = take(key);
        if (!e) return dflt;
        return to_long(*e, key);
    }

    std::uint64_t get_u64(const std::string& key, std::uint64_t dflt) {
        const RawEntry* e = take(key);
        if (!e) return dflt;
        try {
            return std::stoull(e->value);
        } catch (const std::exception&) {
            throw ParseError(e->line, key,
                             "expected an unsigned integer, got '" +
                                 e->value + "'");
        }
    }

    bool get_bool(const std::string& key, bool dflt) {
        const RawEntry* e = take(key);
        if (!e) return dflt;
        const std::string& v = e->value;
        if (v == "true" || v == "yes" || v == "1") return true;
        if (v == "false" || v == "no" || v == "0") return false;
        throw ParseError(e->line, key, "expected true/false, got '" + v + "'");
    }

    /// Comma list of doubles, broadcast if a single value is given.
    std::vector<double> get_doubles(const std::string& key, int count,
                                    double dflt) {
        const RawEntry* e = take(key);
        if (!e) return std::vector<double>(static_cast<std::size_t>(count),
                                           dflt);
        std::vector<double> out;
        for (const std::string& part : split_commas(e->value))
            out.push_back(to_double({e->line, part}, key));
        if (out.size() == 1 && count > 1)
            out.assign(static_cast<std::size_t>(count), out[0]);
        if (out.size() != static_cast<std::size_t>(count)) {
            throw ParseError(e->line, key,
                             "expected " + std::to_string(count) +
                                 " comma-separated values");
        }
        return out;
    }

    std::vector<long> get_longs(const std::string& key, int count,
                                long dflt) {
        const RawEntry* e = take(key);
        if (!e) return std::vector<long>(static_cast<std::size_t>(count),
                                         dflt);
        std::vector<long> out;
        for (const std::string& part : split_commas(e->value))
            out.push_back(to_long({e->line, part}, key));
        if (out.size() == 1 && count > 1)
            out.assign(static_cast<std::size_t>(count), out[0]);
        if (out.size() != static_cast<std::size_t>(count)) {
            throw ParseError(e->line, key,
                             "expected " + std::to_string(count) +
                                 " comma-separated values");
        }
        return out;
    }

    long line_of(const std::string& key) const {
        const auto it = entries_.find(key);
        return it == entries_.end() ? 0 : it->second.line;
    }

    void reject_unconsumed() const {
        for (const auto& [key, entry] : entries_) {
            if (!consumed_.count(key)) {
                throw ParseError(entry.line, key, "unknown key");
            }
        }
    }

private:
    const RawEntry* take(const std::string& key) {
        const auto it = entries_.find(key);
        if (it == entries_.end()) return nullptr;
        consumed_.insert(key);
        return &it->second;
    }

    static double to_double(const RawEntry& e, const std::string& key) {
        const char* begin = e.value.c_str();
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin || *end != '\0') {
            throw ParseError(e.line, key,
                             "expected a number, got '" + e.value + "'");
        }
        return v;
    }

    static long to_long(const RawEntry& e, const std::string& key) {
        try {
            std::size_t pos = 0;
            const long v = std::stol(e.value, &pos);
            if (pos != e.value.size()) throw std::invalid_argument(e.value);
            return v;
        } catch (const std::exception&) {
            throw ParseError(e.line, key,
                             "expected an integer, got '" + e.value + "'");
        }
    }

    std::map<std::string, RawEntry> entries_;
    std::set<std::string> consumed_;
};

}  // namespace

RunConfig parse_config(const std::string& text) {
    RawConfig raw(text);
    RunConfig cfg;

    // ----- grid -----
    const long dim = raw.get_long("grid.dim", 1);
    const int count = (dim >= 1 && dim <= 3) ? static_cast<int>(dim) : 1;
    cfg.grid.dim = static_cast<int>(dim);
    const std::vector<long> cells = raw.get_longs("grid.n", count, 64);
    const std::vector<double> extents =
        raw.get_doubles("grid.extent", count, 1.0);
    for (int a = 0; a < count; ++a) {
        cfg.grid.cells[a] = static_cast<int>(cells[static_cast<std::size_t>(a)]);
        cfg.grid.extent[a] = extents[static_cast<std::size_t>(a)];
    }
    const std::string bc = raw.get_string("grid.bc", "dirichlet");
    if (bc == "dirichlet") {
        cfg.grid.bc = Bc::DirichletZero;
    } else if (bc == "neumann") {
        cfg.grid.bc = Bc::NeumannZero;
    } else {
        throw ParseError(raw.line_of("grid.bc"), "bc",
                         "expected 'dirichlet' or 'neumann', got '" + bc +
                             "'");
    }

    // ----- model -----
    cfg.params.a = raw.get_double("model.a", cfg.params.a);
    cfg.params.b = raw.get_double("model.b", cfg.params.b);
    cfg.params.c = raw.get_double("model.c", cfg.params.c);
    cfg.params.L = raw.get_double("model.L", cfg.params.L);
    cfg.params.M = raw.get_double("model.M", cfg.params.M);
    const std::string a0 = raw.get_string("model.A0", "auto");
    if (a0 == "auto") {
        cfg.a0_auto = true;
        cfg.params.A0 = 0.0;
    } else {
        cfg.a0_auto = false;
        const char* begin = a0.c_str();
        char* end = nullptr;
        cfg.params.A0 = std::strtod(begin, &end);
        if (end == begin || *end != '\0') {
            throw ParseError(raw.line_of("model.A0"), "A0",
                             "expected a number or 'auto', got '" + a0 + "'");
        }
    }

    // ----- time -----
    cfg.dt = raw.get_double("time.dt", cfg.dt);
    cfg.T = raw.get_double("time.T", cfg.T);

    // ----- initial -----
    std::string kind = raw.get_string("initial.kind", "zero");
    for (char& ch : kind)
        if (ch == '_') ch = '-';
    if (kind == "zero") {
        cfg.initial.kind = InitialKind::Zero;
    } else if (kind == "uniaxial-bump" || kind == "bump") {
        cfg.initial.kind = InitialKind::UniaxialBump;
    } else if (kind == "random-seeded" || kind == "random") {
        cfg.initial.kind = InitialKind::RandomSeeded;
    } else if (kind == "file") {
        cfg.initial.kind = InitialKind::File;
    } else {
        throw ParseError(raw.line_of("initial.kind"), "kind",
                         "expected zero | uniaxial-bump | random-seeded | "
                         "file, got '" +
                             kind + "'");
    }
    cfg.initial.s = raw.get_double("initial.s", 1.0);
    const bool has_center = raw.has("initial.center");
    const bool has_width = raw.has("initial.width");
    const std::vector<double> center =
        raw.get_doubles("initial.center", count, 0.0);
    const std::vector<double> width =
        raw.get_doubles("initial.width", count, 0.0);
    for (int a = 0; a < count; ++a) {
        const std::size_t ia = static_cast<std::size_t>(a);
        cfg.initial.center[a] =
            has_center ? center[ia] : 0.5 * cfg.grid.extent[a];
        cfg.initial.width[a] =
            has_width ? width[ia] : 0.25 * cfg.grid.extent[a];
    }
    cfg.initial.axis = static_cast<int>(raw.get_long("initial.axis", 0));
    cfg.initial.seed = raw.get_u64("initial.seed", 1);
    cfg.initial.amplitude = raw.get_double("initial.amplitude", 0.1);
    cfg.initial.path = raw.get_string("initial.path", "");

    // ----- solver -----
    cfg.cg_tol = raw.get_double("solver.cg_tol", 1e-12);
    cfg.cg_max_iter = raw.get_long("solver.cg_max_iter", 0);
    cfg.abort_on_r_loss = raw.get_bool("solver.abort_on_r_loss", false);

    // ----- output -----
    cfg.snapshot_stride = raw.get_long("output.snapshot_stride", 1);
    cfg.output_dir = raw.get_string("output.dir", "out");

    raw.reject_unconsumed();

    // ----- validation: collect every violation, then throw once -----
    std::vector<std::string> bad;
    auto check = [&bad](bool ok, const std::string& msg) {
        if (!ok) bad.push_back(msg);
    };
    check(cfg.grid.dim >= 1 && cfg.grid.dim <= 3,
          "dim: must be 1, 2 or 3 (got " + std::to_string(cfg.grid.dim) +
              ")");
    for (int a = 0; a < count; ++a) {
        check(cfg.grid.cells[a] >= 2,
              "n: axis " + std::to_string(a) +
                  " needs at least 2 cells (got " +
                  std::to_string(cfg.grid.cells[a]) + ")");
        check(cfg.grid.extent[a] > 0.0,
              "extent: axis " + std::to_string(a) + " must be positive");
    }
    check(cfg.params.c > 0.0,
          "c: must be > 0 so the bulk potential is bounded below (got " +
              format_g17(cfg.params.c) + ")");
    check(cfg.params.L > 0.0, "L: must be > 0");
    check(cfg.params.M > 0.0, "M: must be > 0");
    if (!cfg.a0_auto) {
        check(cfg.params.A0 >= 0.0, "A0: must be >= 0 or 'auto'");
    }
    check(cfg.dt > 0.0, "dt: must be > 0 (got " + format_g17(cfg.dt) + ")");
    check(cfg.T >= cfg.dt, "T: must be >= dt");
    check(cfg.snapshot_stride >= 1, "snapshot_stride: must be >= 1");
    check(cfg.cg_tol > 0.0, "cg_tol: must be > 0");
    check(cfg.cg_max_iter >= 0, "cg_max_iter: must be >= 0 (0 = auto)");
    if (cfg.initial.kind == InitialKind::UniaxialBump) {
        check(cfg.initial.axis >= 0 && cfg.initial.axis <= 2,
              "axis: must be 0, 1 or 2");
        for (int a = 0; a < count; ++a)
            check(cfg.initial.width[a] > 0.0,
                  "width: axis " + std::to_string(a) + " must be positive");
    }
    if (cfg.initial.kind == InitialKind::RandomSeeded) {
        check(cfg.initial.amplitude >= 0.0, "amplitude: must be >= 0");
    }
    if (cfg.initial.kind == InitialKind::File) {
        check(!cfg.initial.path.empty(), "path: required for file initial");
    }
    if (!bad.empty()) throw ValidationError(std::move(bad));
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse_config(buf.str());
}

std::string serialize_config(const RunConfig& cfg) {
    std::ostringstream os;
    os << "[grid]\n";
    os << "dim = " << cfg.grid.dim << '\n';
    os << "n = ";
    for (int a = 0; a < cfg.grid.dim; ++a)
        os << (a ? "," : "") << cfg.grid.cells[a];
    os << '\n';
    os << "extent = ";
    for (int a = 0; a < cfg.grid.dim; ++a)
        os << (a ? "," : "") << format_g17(cfg.grid.extent[a]);
    os << '\n';
    os << "bc = "
       << (cfg.grid.bc == Bc::DirichletZero ? "dirichlet" : "neumann")
       << '\n';

    os << "\n[model]\n";
    os << "a = " << format_g17(cfg.params.a) << '\n';
    os << "b = " << format_g17(cfg.params.b) << '\n';
    os << "c = " << format_g17(cfg.params.c) << '\n';
    os << "L = " << format_g17(cfg.params.L) << '\n';
    os << "M = " << format_g17(cfg.params.M) << '\n';
    os << "A0 = " << (cfg.a0_auto ? "auto" : format_g17(cfg.params.A0))
       << '\n';

    os << "\n[time]\n";
    os << "dt = " << format_g17(cfg.dt) << '\n';
    os << "T = " << format_g17(cfg.T) << '\n';

    os << "\n[initial]\n";
    switch (cfg.initial.kind) {
        case InitialKind::Zero:
            os << "kind = zero\n";
            break;
        case InitialKind::UniaxialBump:
            os << "kind = uniaxial-bump\n";
            os << "s = " << format_g17(cfg.initial.s) << '\n';
            os << "center = ";
            for (int a = 0; a < cfg.grid.dim; ++a)
                os << (a ? "," : "") << format_g17(cfg.initial.center[a]);
            os << '\n';
            os << "width = ";
            for (int a = 0; a < cfg.grid.dim; ++a)
                os << (a ? "," : "") << format_g17(cfg.initial.width[a]);
            os << '\n';
            os << "axis = " << cfg.initial.axis << '\n';
            break;
        case InitialKind::RandomSeeded:
            os << "kind = random-seeded\n";
            os << "seed = " << cfg.initial.seed << '\n';
            os << "amplitude = " << format_g17(cfg.initial.amplitude) << '\n';
            break;
        case InitialKind::File:
            os << "kind = file\n";
            os << "path = " << cfg.initial.path << '\n';
            break;
    }

    os << "\n[solver]\n";
    os << "cg_tol = " << format_g17(cfg.cg_tol) << '\n';
    os << "cg_max_iter = " << cfg.cg_max_iter << '\n';
    os << "abort_on_r_loss = " << (cfg.abort_on_r_loss ? "true" : "false")
       << '\n';

    os << "\n[output]\n";
    os << "snapshot_stride = " << cfg.snapshot_stride << '\n';
    os << "dir = " << cfg.output_dir << '\n';
    return os.str();
}

namespace {

double max_norm_field(const QTensorField& f) {
    double m = 0.0;
    for (const QTensor& q : f.v) m = std::max(m, norm_sq(q));
    return std::sqrt(m);
}

QTensorField build_initial_field(const RunConfig& cfg) {
    const Grid& g = cfg.grid;
    QTensorField q0(g);
    switch (cfg.initial.kind) {
        case InitialKind::Zero:
            break;
        case InitialKind::UniaxialBump: {
            for (int i = 0; i < g.nodes(0); ++i)
                for (int j = 0; j < g.nodes(1); ++j)
                    for (int k = 0; k < g.nodes(2); ++k) {
                        static const double pi = std::acos(-1.0);
                        const int c[3] = {i, j, k};
                        double profile = 1.0;
                        for (int a = 0; a < g.dim; ++a) {
                            const double x = c[a] * g.h(a);
                            const double u = (x - cfg.initial.center[a]) /
                                             cfg.initial.width[a];
                            if (std::fabs(u) >= 1.0) {
                                profile = 0.0;
                                break;
                            }
                            const double cu = std::cos(0.5 * pi * u);
                            profile *= cu * cu;
                        }
                        q0.at(i, j, k) = QTensor::uniaxial(
                            cfg.initial.s * profile, cfg.initial.axis);
                    }
            break;
        }
        case InitialKind::RandomSeeded: {
            Rng rng(cfg.initial.seed);
            for (QTensor& q : q0.v) q = rng.tensor(cfg.initial.amplitude);
            break;
        }
        case InitialKind::File: {
            QTensorField loaded = load_qtensor_field(cfg.initial.path);
            if (!grids_compatible(loaded.grid, g)) {
                throw GridMismatchError(
                    "field file " + cfg.initial.path +
                    " does not match the configured grid");
            }
            loaded.grid = g;  // adopt the configured extents exactly
            q0 = std::move(loaded);
            break;
        }
    }
    project_bc(q0);
    return q0;
}

}  // namespace

SchemeState make_initial(const RunConfig& cfg) {
    QTensorField q0 = build_initial_field(cfg);
    const double radius = std::max(1.0, 2.0 * max_norm_field(q0));
    ModelParams p = cfg.params;
    if (cfg.a0_auto) p.A0 = suggest_a0(radius, p);
    try {
        return make_state(std::move(q0), p, cfg.dt);
    } catch (const NonpositiveRadicandError& e) {
        throw NonpositiveRadicandError(
            e.radicand(), e.node(),
            std::string(e.what()) + " [node " + std::to_string(e.node()) +
                "; suggested A0 >= " +
                format_g17(suggest_a0(radius, p)) + "]");
    }
}

StepOptions solve_options(const RunConfig& cfg) {
    StepOptions opt;
    opt.cg_tol = cfg.cg_tol;
    opt.cg_max_iter = cfg.cg_max_iter;
    opt.abort_on_r_loss = cfg.abort_on_r_loss;
    return opt;
}

RunConfig default_config() {
    RunConfig cfg;
    cfg.grid.dim = 1;
    cfg.grid.cells = {64, 1, 1};
    cfg.grid.extent = {1.0, 1.0, 1.0};
    cfg.grid.bc = Bc::DirichletZero;
    cfg.params = ModelParams{};  // a=-0.3, b=1, c=1, L=0.01, M=1
    cfg.a0_auto = true;
    cfg.params.A0 = 0.0;  // canonical form under an automatic shift
    cfg.dt = 1e-3;
    cfg.T = 0.5;
    cfg.initial.kind = InitialKind::UniaxialBump;
    cfg.initial.s = 2.0;
    cfg.initial.center = {0.5, 0.5, 0.5};
    cfg.initial.width = {0.25, 0.25, 0.25};
    cfg.initial.axis = 0;
    return cfg;
}

}  // namespace qtflow
