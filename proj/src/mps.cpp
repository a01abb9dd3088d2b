#include "vinfra/lp.hpp"

#include <cstdio>
#include <map>
#include <sstream>

namespace vinfra {

namespace {

// full-precision value literal; one (row, value) pair per line keeps the
// layout safe for both columnar and token-based fixed-format readers
std::string field_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12G", v);
    return buf;
}

class NameMangler {
  public:
    explicit NameMangler(char prefix) : prefix_(prefix) {}

    std::string shorten(const std::string& name) {
        const auto it = map_.find(name);
        if (it != map_.end()) return it->second;
        std::string out = name;
        if (name.size() > 8) {
            char buf[16];
            std::snprintf(buf, sizeof(buf), "%c%07zu", prefix_, counter_++);
            out = buf;
            mangled_.emplace_back(out, name);
        }
        map_.emplace(name, out);
        return out;
    }

    const std::vector<std::pair<std::string, std::string>>& mangled() const { return mangled_; }

  private:
    char prefix_;
    std::size_t counter_ = 0;
    std::map<std::string, std::string> map_;
    std::vector<std::pair<std::string, std::string>> mangled_;
};

void emit_entry(std::ostringstream& os, const std::string& col, const std::string& row,
                double value) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "    %-8s  %-8s  %14s\n", col.c_str(), row.c_str(),
                  field_value(value).c_str());
    os << buf;
}

} // namespace

std::string emit_mps(const LinearProgram& lp, const std::string& name) {
    const auto& vars = lp.variables();
    const auto& rows = lp.constraints();

    NameMangler row_names('R');
    NameMangler col_names('C');
    std::vector<std::string> rn(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        rn[r] = row_names.shorten(rows[r].name.empty() ? "ROW" + std::to_string(r) : rows[r].name);
    std::vector<std::string> cn(vars.size());
    for (std::size_t v = 0; v < vars.size(); ++v) cn[v] = col_names.shorten(vars[v].name);

    std::ostringstream os;
    os << "NAME          " << name << '\n';
    for (const auto& [shortn, longn] : row_names.mangled())
        os << "* NAME-MAP ROW " << shortn << ' ' << longn << '\n';
    for (const auto& [shortn, longn] : col_names.mangled())
        os << "* NAME-MAP COL " << shortn << ' ' << longn << '\n';

    os << "ROWS\n N  COST\n";
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const char rel = rows[r].relation == Relation::LessEqual
                             ? 'L'
                             : (rows[r].relation == Relation::Equal ? 'E' : 'G');
        os << ' ' << rel << "  " << rn[r] << '\n';
    }

    // column-major coefficient lists
    std::vector<std::vector<std::pair<std::size_t, double>>> cols(vars.size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (const auto& [v, c] : rows[r].terms)
            if (c != 0.0) cols[v].emplace_back(r, c);

    os << "COLUMNS\n";
    bool in_integer_block = false;
    std::size_t marker = 0;
    for (std::size_t v = 0; v < vars.size(); ++v) {
        if (vars[v].integral != in_integer_block) {
            os << "    MARKER" << marker++ << "   'MARKER'                 '"
               << (vars[v].integral ? "INTORG" : "INTEND") << "'\n";
            in_integer_block = vars[v].integral;
        }
        if (vars[v].objective != 0.0) emit_entry(os, cn[v], "COST", vars[v].objective);
        for (const auto& [r, c] : cols[v]) emit_entry(os, cn[v], rn[r], c);
        if (vars[v].objective == 0.0 && cols[v].empty())
            emit_entry(os, cn[v], "COST", 0.0); // keep the column declared
    }
    if (in_integer_block)
        os << "    MARKER" << marker++ << "   'MARKER'                 'INTEND'\n";

    os << "RHS\n";
    for (std::size_t r = 0; r < rows.size(); ++r)
        if (rows[r].rhs != 0.0) emit_entry(os, "RHS", rn[r], rows[r].rhs);

    bool any_bound = false;
    for (const auto& v : vars) any_bound = any_bound || v.lower != 0.0 || v.upper;
    if (any_bound) {
        os << "BOUNDS\n";
        char buf[80];
        for (std::size_t v = 0; v < vars.size(); ++v) {
            if (vars[v].lower != 0.0) {
                std::snprintf(buf, sizeof(buf), " LO %-8s  %-8s  %14s\n", "BND", cn[v].c_str(),
                              field_value(vars[v].lower).c_str());
                os << buf;
            }
            if (vars[v].upper) {
                std::snprintf(buf, sizeof(buf), " UP %-8s  %-8s  %14s\n", "BND", cn[v].c_str(),
                              field_value(*vars[v].upper).c_str());
                os << buf;
            }
        }
    }
    os << "ENDATA\n";
    return os.str();
}

} // namespace vinfra
