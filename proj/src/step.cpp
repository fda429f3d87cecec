#include <cctype>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "neuronurbs/io.hpp"

namespace nnrb::io {

namespace {

// Parsed parameter value of a Part 21 instance.
struct Value {
  enum class Kind { kNumber, kString, kEnum, kRef, kList, kNull, kDerived } kind;
  double number = 0.0;
  std::string text;  // string / enum payload
  long ref = 0;
  std::vector<Value> list;
};

struct Record {
  std::string name;
  std::vector<Value> args;
};

struct Instance {
  long id = 0;
  std::vector<Record> records;  // one for simple, several for complex
};

class Lexer {
 public:
  Lexer(const std::string &text, std::size_t pos) : text_(text), pos_(pos) {}

  void skip_ws() {
    while (pos_ < text_.size()) {
      if (std::isspace(static_cast<unsigned char>(text_[pos_]))) { ++pos_; continue; }
      if (text_.compare(pos_, 2, "/*") == 0) {
        std::size_t end = text_.find("*/", pos_ + 2);
        if (end == std::string::npos) fail("unterminated comment");
        pos_ = end + 2;
        continue;
      }
      break;
    }
  }

  char peek() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    return text_[pos_];
  }
  char get() { char c = peek(); ++pos_; return c; }
  void expect(char c) {
    char got = get();
    if (got != c) fail(std::string("expected '") + c + "', got '" + got + "'");
  }
  bool accept(char c) {
    if (pos_ < text_.size() && peek() == c) { ++pos_; return true; }
    return false;
  }

  std::string identifier() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    if (start == pos_) fail("expected identifier");
    return text_.substr(start, pos_ - start);
  }

  long integer() {
    skip_ws();
    std::size_t consumed = 0;
    long v = std::stol(text_.substr(pos_), &consumed);
    pos_ += consumed;
    return v;
  }

  double real() {
    skip_ws();
    std::size_t consumed = 0;
    double v = std::stod(text_.substr(pos_), &consumed);
    pos_ += consumed;
    return v;
  }

  std::size_t pos() const { return pos_; }

  [[noreturn]] void fail(const std::string &what) const {
    throw std::runtime_error("step-parse: " + what + " at offset " + std::to_string(pos_));
  }

 private:
  const std::string &text_;
  std::size_t pos_;
};

Value parse_value(Lexer &lex) {
  char c = lex.peek();
  Value v;
  if (c == '#') {
    lex.get();
    v.kind = Value::Kind::kRef;
    v.ref = lex.integer();
  } else if (c == '\'') {
    lex.get();
    v.kind = Value::Kind::kString;
    while (true) {
      if (lex.peek() == '\'') { lex.get(); if (lex.accept('\'')) v.text += '\''; else break; }
      else v.text += lex.get();
    }
  } else if (c == '.') {
    lex.get();
    v.kind = Value::Kind::kEnum;
    while (lex.peek() != '.') v.text += lex.get();
    lex.get();
  } else if (c == '(') {
    lex.get();
    v.kind = Value::Kind::kList;
    if (!lex.accept(')')) {
      while (true) {
        v.list.push_back(parse_value(lex));
        if (lex.accept(')')) break;
        lex.expect(',');
      }
    }
  } else if (c == '$') {
    lex.get();
    v.kind = Value::Kind::kNull;
  } else if (c == '*') {
    lex.get();
    v.kind = Value::Kind::kDerived;
  } else if (c == '-' || c == '+' || std::isdigit(static_cast<unsigned char>(c))) {
    v.kind = Value::Kind::kNumber;
    v.number = lex.real();
  } else {
    lex.fail("unexpected character in parameter list");
  }
  return v;
}

Record parse_record(Lexer &lex) {
  Record r;
  r.name = lex.identifier();
  lex.expect('(');
  if (!lex.accept(')')) {
    while (true) {
      r.args.push_back(parse_value(lex));
      if (lex.accept(')')) break;
      lex.expect(',');
    }
  }
  return r;
}

[[noreturn]] void entity_fail(long id, const std::string &what) {
  throw std::runtime_error("step-entity: #" + std::to_string(id) + ": " + what);
}

const Value &arg(const Instance &inst, const Record &rec, std::size_t i) {
  if (i >= rec.args.size())
    entity_fail(inst.id, rec.name + ": argument " + std::to_string(i) + " missing");
  return rec.args[i];
}

double num_arg(const Instance &inst, const Record &rec, std::size_t i) {
  const Value &v = arg(inst, rec, i);
  if (v.kind != Value::Kind::kNumber) entity_fail(inst.id, rec.name + ": expected number");
  return v.number;
}

std::vector<double> expand_knots(const Instance &inst, const Value &mults,
                                 const Value &knots) {
  if (mults.kind != Value::Kind::kList || knots.kind != Value::Kind::kList ||
      mults.list.size() != knots.list.size())
    entity_fail(inst.id, "knot/multiplicity lists malformed");
  std::vector<double> out;
  for (std::size_t i = 0; i < mults.list.size(); ++i) {
    if (mults.list[i].kind != Value::Kind::kNumber ||
        knots.list[i].kind != Value::Kind::kNumber)
      entity_fail(inst.id, "knot/multiplicity entries must be numeric");
    long m = static_cast<long>(mults.list[i].number);
    if (m < 1) entity_fail(inst.id, "nonpositive knot multiplicity");
    for (long r = 0; r < m; ++r) out.push_back(knots.list[i].number);
  }
  return out;
}

Grid<Vec3> resolve_points(const Instance &inst, const Value &lists,
                          const std::map<long, Instance> &instances) {
  if (lists.kind != Value::Kind::kList || lists.list.empty())
    entity_fail(inst.id, "control point list malformed");
  std::size_t rows = lists.list.size();
  std::size_t cols = 0;
  Grid<Vec3> grid;
  for (std::size_t i = 0; i < rows; ++i) {
    const Value &row = lists.list[i];
    if (row.kind != Value::Kind::kList) entity_fail(inst.id, "control point row malformed");
    if (i == 0) {
      cols = row.list.size();
      grid = Grid<Vec3>(rows, cols);
    } else if (row.list.size() != cols) {
      entity_fail(inst.id, "ragged control point grid");
    }
    for (std::size_t j = 0; j < cols; ++j) {
      const Value &cell = row.list[j];
      if (cell.kind != Value::Kind::kRef) entity_fail(inst.id, "control point is not a reference");
      auto it = instances.find(cell.ref);
      if (it == instances.end())
        entity_fail(inst.id, "dangling reference #" + std::to_string(cell.ref));
      const Instance &pt = it->second;
      if (pt.records.size() != 1 || pt.records[0].name != "CARTESIAN_POINT")
        entity_fail(inst.id, "#" + std::to_string(cell.ref) + " is not a CARTESIAN_POINT");
      const Value &coords = arg(pt, pt.records[0], 1);
      if (coords.kind != Value::Kind::kList || coords.list.size() != 3)
        entity_fail(pt.id, "CARTESIAN_POINT needs 3 coordinates");
      grid.at(i, j) = {coords.list[0].number, coords.list[1].number, coords.list[2].number};
    }
  }
  return grid;
}

Grid<double> resolve_weights(const Instance &inst, const Value &lists, std::size_t rows,
                             std::size_t cols) {
  if (lists.kind != Value::Kind::kList || lists.list.size() != rows)
    entity_fail(inst.id, "weight grid malformed");
  Grid<double> w(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    const Value &row = lists.list[i];
    if (row.kind != Value::Kind::kList || row.list.size() != cols)
      entity_fail(inst.id, "weight grid dims do not match control grid");
    for (std::size_t j = 0; j < cols; ++j) {
      if (row.list[j].kind != Value::Kind::kNumber)
        entity_fail(inst.id, "weight is not numeric");
      w.at(i, j) = row.list[j].number;
    }
  }
  return w;
}

NurbsSurface build_surface(const Instance &inst, const Record &geometry,
                           const Record &knot_rec, std::size_t knot_arg_offset,
                           const Grid<double> *weights,
                           const std::map<long, Instance> &instances) {
  // geometry record: [name,] u_degree, v_degree, points, form, closed_u, closed_v, selfint
  std::size_t off = geometry.name == "B_SPLINE_SURFACE" ? 0 : 1;
  int p = static_cast<int>(num_arg(inst, geometry, off + 0));
  int q = static_cast<int>(num_arg(inst, geometry, off + 1));
  Grid<Vec3> points = resolve_points(inst, arg(inst, geometry, off + 2), instances);

  std::vector<double> ku = expand_knots(inst, arg(inst, knot_rec, knot_arg_offset + 0),
                                        arg(inst, knot_rec, knot_arg_offset + 2));
  std::vector<double> kv = expand_knots(inst, arg(inst, knot_rec, knot_arg_offset + 1),
                                        arg(inst, knot_rec, knot_arg_offset + 3));
  if (ku.size() != points.rows + p + 1)
    entity_fail(inst.id, "U knot sequence length != n + p + 1 after expansion");
  if (kv.size() != points.cols + q + 1)
    entity_fail(inst.id, "V knot sequence length != m + q + 1 after expansion");

  NurbsSurface s;
  s.degree_u = p;
  s.degree_v = q;
  try {
    s.knots_u = KnotVector(ku);
    s.knots_v = KnotVector(kv);
  } catch (const std::invalid_argument &e) {
    entity_fail(inst.id, e.what());
  }
  s.control_points = points;
  s.weights = weights ? *weights : Grid<double>(points.rows, points.cols, 1.0);
  try {
    s.validate();
  } catch (const std::invalid_argument &e) {
    entity_fail(inst.id, e.what());
  }
  return s;
}

}  // namespace

StepExtraction extract_step_surfaces(const std::string &text) {
  std::size_t data = text.find("DATA;");
  if (data == std::string::npos)
    throw std::runtime_error("step-parse: no DATA section found");
  std::size_t endsec = text.find("ENDSEC;", data);
  std::string body = text.substr(data + 5, endsec == std::string::npos
                                               ? std::string::npos
                                               : endsec - data - 5);

  // pass 1: collect instances
  std::map<long, Instance> instances;
  Lexer lex(body, 0);
  while (true) {
    lex.skip_ws();
    if (lex.pos() >= body.size()) break;
    Instance inst;
    lex.expect('#');
    inst.id = lex.integer();
    lex.expect('=');
    if (lex.peek() == '(') {
      lex.get();
      while (!lex.accept(')')) inst.records.push_back(parse_record(lex));
    } else {
      inst.records.push_back(parse_record(lex));
    }
    lex.expect(';');
    if (!instances.emplace(inst.id, inst).second)
      entity_fail(inst.id, "duplicate entity id");
  }

  // pass 2: build surfaces
  StepExtraction out;
  for (const auto &[id, inst] : instances) {
    if (inst.records.size() == 1) {
      const Record &rec = inst.records[0];
      if (rec.name == "B_SPLINE_SURFACE_WITH_KNOTS") {
        // args: name, p, q, points, form, cu, cv, si, umult, vmult, uknots, vknots, spec
        out.surfaces.push_back(build_surface(inst, rec, rec, 8, nullptr, instances));
      } else if (rec.name == "CARTESIAN_POINT") {
        // consumed via references
      } else {
        out.skipped[rec.name]++;
      }
      continue;
    }
    // complex entity: look for the rational B-spline surface combination
    const Record *geom = nullptr, *knots = nullptr, *rational = nullptr;
    for (const Record &rec : inst.records) {
      if (rec.name == "B_SPLINE_SURFACE") geom = &rec;
      else if (rec.name == "B_SPLINE_SURFACE_WITH_KNOTS") knots = &rec;
      else if (rec.name == "RATIONAL_B_SPLINE_SURFACE") rational = &rec;
    }
    if (geom && knots && rational) {
      Grid<Vec3> pts = resolve_points(inst, arg(inst, *geom, 2), instances);
      Grid<double> w = resolve_weights(inst, arg(inst, *rational, 0), pts.rows, pts.cols);
      out.surfaces.push_back(build_surface(inst, *geom, *knots, 0, &w, instances));
    } else if (!inst.records.empty()) {
      out.skipped[inst.records.front().name + " (complex)"]++;
    }
  }
  return out;
}

}  // namespace nnrb::io
