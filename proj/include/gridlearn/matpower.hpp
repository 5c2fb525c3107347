#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "gridlearn/grid.hpp"

namespace gridlearn::grid {

// MATPOWER matrix-table dialect. Accepted columns (1-based, standard order):
//   bus     [bus_i type Pd Qd Gs Bs area Vm Va baseKV zone Vmax Vmin]
//   gen     [bus Pg Qg Qmax Qmin Vg mBase status Pmax Pmin ...]
//   branch  [fbus tbus r x b rateA rateB rateC ratio angle status angmin angmax]
//   gencost [2 startup shutdown n c_{n-1} ... c_0]   (polynomial, degree <= 2)
// MW/MVAr columns are divided by baseMVA, angles converted to radians, series
// impedance to g = r/(r^2+x^2), b = -x/(r^2+x^2). Rows with status 0 are
// dropped. Shunts, line charging, tap ratios, and phase shifts are parsed but
// ignored (a warning is emitted when nonzero values are dropped).

namespace detail {

struct Cell {
  double value;
  int line, col;
};

struct Table {
  std::vector<std::vector<Cell>> rows;
};

class CaseScanner {
 public:
  explicit CaseScanner(std::string_view text) : text_(text) {}

  double base_mva = -1.0;
  std::map<std::string, Table> tables;

  void run() {
    while (!eof()) {
      skip_ws_and_comments();
      if (eof()) break;
      if (match_keyword("function")) {
        skip_to_eol();
        continue;
      }
      std::string lhs = read_identifier_path();
      if (lhs.empty()) {
        throw ParseError("expected assignment or 'function' line", line_, col_);
      }
      skip_ws_and_comments();
      expect('=');
      skip_ws_and_comments();
      std::string field = field_of(lhs);
      if (peek() == '[') {
        tables[field] = read_matrix();
      } else if (peek() == '\'' || peek() == '"') {
        read_string();  // e.g. mpc.version = '2';
      } else {
        double v = read_number();
        if (field == "baseMVA") base_mva = v;
      }
      skip_ws_and_comments();
      if (peek() == ';') advance();
    }
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1, col_ = 1;

  bool eof() const { return pos_ >= text_.size(); }
  char peek() const { return eof() ? '\0' : text_[pos_]; }

  void advance() {
    if (eof()) return;
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_ws_and_comments() {
    while (!eof()) {
      char c = peek();
      if (c == '%') {
        skip_to_eol();
      } else if (c == '.' && pos_ + 2 < text_.size() && text_[pos_ + 1] == '.' &&
                 text_[pos_ + 2] == '.') {
        skip_to_eol();  // MATLAB line continuation
      } else if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
        advance();
      } else {
        break;
      }
    }
  }

  void skip_to_eol() {
    while (!eof() && peek() != '\n') advance();
  }

  void expect(char c) {
    if (peek() != c)
      throw ParseError(std::string("expected '") + c + "'", line_, col_);
    advance();
  }

  bool match_keyword(std::string_view kw) {
    if (text_.substr(pos_, kw.size()) != kw) return false;
    std::size_t after = pos_ + kw.size();
    if (after < text_.size() &&
        (std::isalnum(static_cast<unsigned char>(text_[after])) || text_[after] == '_'))
      return false;
    for (std::size_t i = 0; i < kw.size(); ++i) advance();
    return true;
  }

  std::string read_identifier_path() {
    std::string out;
    while (!eof()) {
      char c = peek();
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.') {
        out += c;
        advance();
      } else {
        break;
      }
    }
    return out;
  }

  static std::string field_of(const std::string& lhs) {
    std::size_t dot = lhs.rfind('.');
    return dot == std::string::npos ? lhs : lhs.substr(dot + 1);
  }

  void read_string() {
    char quote = peek();
    advance();
    while (!eof() && peek() != quote) advance();
    if (eof()) throw ParseError("unterminated string", line_, col_);
    advance();
  }

  double read_number() {
    skip_ws_and_comments();
    int l = line_, c = col_;
    std::size_t start = pos_;
    if (peek() == '+' || peek() == '-') advance();
    bool any = false;
    while (!eof()) {
      char ch = peek();
      if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '.') {
        any = true;
        advance();
      } else if ((ch == 'e' || ch == 'E') && any) {
        advance();
        if (peek() == '+' || peek() == '-') advance();
      } else {
        break;
      }
    }
    if (!any) throw ParseError("expected a number", l, c);
    std::string tok(text_.substr(start, pos_ - start));
    char* end = nullptr;
    double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0')
      throw ParseError("malformed number '" + tok + "'", l, c);
    return v;
  }

  Table read_matrix() {
    expect('[');
    Table t;
    std::vector<Cell> row;
    while (true) {
      skip_ws_and_comments();
      if (eof()) throw ParseError("unterminated matrix (missing ']')", line_, col_);
      char c = peek();
      if (c == ']') {
        advance();
        if (!row.empty()) t.rows.push_back(std::move(row));
        return t;
      }
      if (c == ';' || c == '\n') {
        advance();
        if (!row.empty()) {
          t.rows.push_back(std::move(row));
          row.clear();
        }
        continue;
      }
      int l = line_, cc = col_;
      double v = read_number();
      row.push_back({v, l, cc});
    }
  }
};

inline const Table& require_table(const std::map<std::string, Table>& tables,
                                  const std::string& name) {
  auto it = tables.find(name);
  if (it == tables.end() || it->second.rows.empty())
    throw ParseError("missing required table '" + name + "'", 1, 1);
  return it->second;
}

inline void require_width(const Table& t, const std::string& name, std::size_t w) {
  for (const auto& row : t.rows)
    if (row.size() < w)
      throw ParseError("table '" + name + "' row has " + std::to_string(row.size()) +
                           " columns, need at least " + std::to_string(w),
                       row.empty() ? 1 : row[0].line, row.empty() ? 1 : row[0].col);
}

}  // namespace detail

inline constexpr double kDefaultBaseKv = 100.0;

/// Parses MATPOWER-dialect case text into a validated per-unit Network.
/// Warnings about dropped data (shunts, charging, taps, shifts) are appended
/// to `warnings` when given.
inline Network parse_case(std::string_view text, const std::string& name = "case",
                          std::vector<std::string>* warnings = nullptr) {
  detail::CaseScanner scan(text);
  scan.run();
  auto warn = [warnings](const std::string& msg) {
    if (warnings) warnings->push_back(msg);
  };

  if (scan.base_mva < 0.0) throw ParseError("missing baseMVA", 1, 1);
  if (scan.base_mva <= 0.0) throw CaseError("baseMVA must be positive");
  const double base = scan.base_mva;

  const detail::Table& bus_t = detail::require_table(scan.tables, "bus");
  const detail::Table& gen_t = detail::require_table(scan.tables, "gen");
  const detail::Table& branch_t = detail::require_table(scan.tables, "branch");
  const detail::Table& gencost_t = detail::require_table(scan.tables, "gencost");
  detail::require_width(bus_t, "bus", 13);
  detail::require_width(gen_t, "gen", 10);
  detail::require_width(branch_t, "branch", 11);
  detail::require_width(gencost_t, "gencost", 4);

  Network net;
  net.name = name;
  net.base_mva = base;

  std::map<int, int> bus_index;  // original id -> dense index
  bool have_ref = false;
  for (const auto& row : bus_t.rows) {
    int src = static_cast<int>(row[0].value);
    if (bus_index.count(src))
      throw CaseError("duplicate bus id " + std::to_string(src));
    int idx = static_cast<int>(net.buses.size());
    bus_index[src] = idx;
    net.original_bus_id.push_back(src);

    Bus b;
    b.id = idx;
    int type = static_cast<int>(row[1].value);
    if (type == 3 && !have_ref) {
      b.is_reference = true;
      have_ref = true;
    }
    double pd = row[2].value, qd = row[3].value;
    double gs = row[4].value, bs = row[5].value;
    if (gs != 0.0 || bs != 0.0)
      warn("bus " + std::to_string(src) + ": shunt (Gs,Bs) ignored");
    b.base_kv = row[9].value;
    if (!(b.base_kv > 0.0)) {
      warn("bus " + std::to_string(src) + ": baseKV not set, using " +
           std::to_string(kDefaultBaseKv) + " kV");
      b.base_kv = kDefaultBaseKv;
    }
    b.v_max = row[11].value;
    b.v_min = row[12].value;
    net.buses.push_back(b);
    if (pd != 0.0 || qd != 0.0) net.loads.push_back({idx, pd / base, qd / base});
  }

  auto lookup_bus = [&bus_index](double raw, const detail::Cell& cell) {
    int src = static_cast<int>(raw);
    auto it = bus_index.find(src);
    if (it == bus_index.end())
      throw CaseError("unknown bus reference " + std::to_string(src) + " at line " +
                      std::to_string(cell.line));
    return it->second;
  };

  std::size_t n_gen_rows = gen_t.rows.size();
  if (gencost_t.rows.size() < n_gen_rows)
    throw CaseError("gencost has fewer rows than gen");
  if (gencost_t.rows.size() > n_gen_rows)
    warn("gencost has extra rows (reactive cost?); using the first " +
         std::to_string(n_gen_rows));

  for (std::size_t r = 0; r < n_gen_rows; ++r) {
    const auto& row = gen_t.rows[r];
    if (static_cast<int>(row[7].value) == 0) continue;  // out of service
    Generator g;
    g.bus = lookup_bus(row[0].value, row[0]);
    g.q_max = row[3].value / base;
    g.q_min = row[4].value / base;
    g.p_max = row[8].value / base;
    g.p_min = row[9].value / base;

    const auto& cost = gencost_t.rows[r];
    int model = static_cast<int>(cost[0].value);
    if (model != 2)
      throw CaseError("gencost row " + std::to_string(r + 1) +
                      ": only polynomial cost (model=2) is supported; "
                      "piecewise-linear tables (model=1) are rejected");
    int ncoef = static_cast<int>(cost[3].value);
    if (ncoef < 0 || ncoef > 3)
      throw CaseError("gencost row " + std::to_string(r + 1) +
                      ": polynomial degree must be <= 2 (n <= 3), got n=" +
                      std::to_string(ncoef));
    if (cost.size() < static_cast<std::size_t>(4 + ncoef))
      throw CaseError("gencost row " + std::to_string(r + 1) + ": missing coefficients");
    double coef[3] = {0.0, 0.0, 0.0};  // c2, c1, c0
    for (int i = 0; i < ncoef; ++i) coef[3 - ncoef + i] = cost[4 + i].value;
    g.c2 = coef[0];
    g.c1 = coef[1];
    g.c0 = coef[2];
    net.generators.push_back(g);
  }

  for (std::size_t r = 0; r < branch_t.rows.size(); ++r) {
    const auto& row = branch_t.rows[r];
    if (static_cast<int>(row[10].value) == 0) continue;  // out of service
    Branch br;
    br.from_bus = lookup_bus(row[0].value, row[0]);
    br.to_bus = lookup_bus(row[1].value, row[1]);
    double rr = row[2].value, xx = row[3].value;
    double denom = rr * rr + xx * xx;
    if (denom == 0.0)
      throw CaseError("branch row " + std::to_string(r + 1) + ": zero series impedance");
    br.g = rr / denom;
    br.b = -xx / denom;
    if (row[4].value != 0.0)
      warn("branch row " + std::to_string(r + 1) + ": line charging ignored");
    if (row[8].value != 0.0 && row[8].value != 1.0)
      warn("branch row " + std::to_string(r + 1) + ": tap ratio ignored");
    if (row[9].value != 0.0)
      warn("branch row " + std::to_string(r + 1) + ": phase shift ignored");
    double rate_a = row[5].value;
    br.s_max = rate_a > 0.0 ? rate_a / base : kUnlimited;
    br.theta_delta = M_PI;
    if (row.size() >= 13) {
      double angmin = row[11].value, angmax = row[12].value;
      bool unconstrained = (angmin == 0.0 && angmax == 0.0) || angmin <= -360.0 ||
                           angmax >= 360.0;
      if (!unconstrained) {
        if (angmin >= 0.0 || angmax <= 0.0) {
          warn("branch row " + std::to_string(r + 1) +
               ": one-sided angle bound not representable, treated as unlimited");
        } else {
          if (-angmin != angmax)
            warn("branch row " + std::to_string(r + 1) +
                 ": asymmetric angle bounds symmetrized to the tighter side");
          br.theta_delta = std::min(angmax, -angmin) * M_PI / 180.0;
        }
      }
    }
    net.branches.push_back(br);
  }

  return Network::build(std::move(net));
}

/// Variant that skips final validation and returns diagnostics instead of
/// throwing CaseError for invariant breaches; syntax errors still throw.
inline Network parse_case_lenient(std::string_view text, const std::string& name,
                                  std::vector<Diagnostic>& diags,
                                  std::vector<std::string>* warnings = nullptr) {
  try {
    Network net = parse_case(text, name, warnings);
    diags = Network::validate(net);
    return net;
  } catch (const CaseError& e) {
    diags.push_back({"case_error", e.what()});
    return Network{};
  }
}

/// Serializes the supported subset back to MATPOWER dialect at full precision,
/// so that parse_case(to_matpower(net)) reproduces `net`.
inline std::string to_matpower(const Network& net) {
  char buf[64];
  auto num = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  const double base = net.base_mva;
  std::string out = "function mpc = " + net.name + "\nmpc.version = '2';\n";
  out += "mpc.baseMVA = " + num(base) + ";\n";

  std::vector<double> pd(net.buses.size(), 0.0), qd(net.buses.size(), 0.0);
  for (const Load& l : net.loads) {
    pd[l.bus] += l.p0 * base;
    qd[l.bus] += l.q0 * base;
  }
  std::vector<char> has_gen(net.buses.size(), 0);
  for (const Generator& g : net.generators) has_gen[g.bus] = 1;

  out += "mpc.bus = [\n";
  for (const Bus& b : net.buses) {
    int src = net.original_bus_id.empty() ? b.id + 1 : net.original_bus_id[b.id];
    int type = b.is_reference ? 3 : (has_gen[b.id] ? 2 : 1);
    out += "\t" + std::to_string(src) + "\t" + std::to_string(type) + "\t" +
           num(pd[b.id]) + "\t" + num(qd[b.id]) + "\t0\t0\t1\t1\t0\t" +
           num(b.base_kv) + "\t1\t" + num(b.v_max) + "\t" + num(b.v_min) + ";\n";
  }
  out += "];\nmpc.gen = [\n";
  for (const Generator& g : net.generators) {
    int src = net.original_bus_id.empty() ? g.bus + 1 : net.original_bus_id[g.bus];
    out += "\t" + std::to_string(src) + "\t0\t0\t" + num(g.q_max * base) + "\t" +
           num(g.q_min * base) + "\t1\t" + num(base) + "\t1\t" + num(g.p_max * base) +
           "\t" + num(g.p_min * base) + ";\n";
  }
  out += "];\nmpc.branch = [\n";
  for (const Branch& br : net.branches) {
    int fs = net.original_bus_id.empty() ? br.from_bus + 1 : net.original_bus_id[br.from_bus];
    int ts = net.original_bus_id.empty() ? br.to_bus + 1 : net.original_bus_id[br.to_bus];
    double m = br.g * br.g + br.b * br.b;
    double r = br.g / m, x = -br.b / m;
    double rate_a = std::isfinite(br.s_max) ? br.s_max * base : 0.0;
    double ang = br.theta_delta >= M_PI ? 360.0 : br.theta_delta * 180.0 / M_PI;
    out += "\t" + std::to_string(fs) + "\t" + std::to_string(ts) + "\t" + num(r) +
           "\t" + num(x) + "\t0\t" + num(rate_a) + "\t0\t0\t0\t0\t1\t" + num(-ang) +
           "\t" + num(ang) + ";\n";
  }
  out += "];\nmpc.gencost = [\n";
  for (const Generator& g : net.generators) {
    out += "\t2\t0\t0\t3\t" + num(g.c2) + "\t" + num(g.c1) + "\t" + num(g.c0) + ";\n";
  }
  out += "];\n";
  return out;
}

}  // namespace gridlearn::grid
