#include "adinfer/graph_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

namespace adinfer {

namespace {

std::vector<std::string> tokenize(const std::string& line) {
  std::string body = line.substr(0, line.find('#'));
  std::istringstream in(body);
  std::vector<std::string> toks;
  std::string t;
  while (in >> t) toks.push_back(t);
  return toks;
}

double parse_value(const std::string& tok, int line) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size())
    throw ParseError("line " + std::to_string(line) + ": bad number '" + tok + "'");
  return v;
}

int parse_int(const std::string& tok, int line) {
  int v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size())
    throw ParseError("line " + std::to_string(line) + ": bad integer '" + tok + "'");
  return v;
}

std::string shortest_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

}  // namespace

FactorGraph parse_graph(const std::string& text) {
  struct FactorDecl {
    std::vector<std::string> scope;  // declared order
    int line;
    std::vector<double> values;
    bool has_table = false;
    int table_line = 0;
  };

  FactorGraph g;
  std::vector<std::pair<std::string, FactorDecl>> factors;
  std::map<std::string, std::size_t> fpos;
  std::vector<EdgeRef> tree;
  std::set<std::pair<std::string, std::string>> tree_seen;

  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto toks = tokenize(line);
    if (toks.empty()) continue;
    const std::string& cmd = toks[0];
    try {
      if (cmd == "var") {
        if (toks.size() != 3)
          throw ParseError("line " + std::to_string(lineno) + ": expected 'var <id> <domain>'");
        g.add_variable(toks[1], parse_int(toks[2], lineno));
      } else if (cmd == "factor") {
        if (toks.size() < 2)
          throw ParseError("line " + std::to_string(lineno) +
                           ": expected 'factor <id> <var ids...>'");
        if (fpos.count(toks[1]))
          throw ParseError("line " + std::to_string(lineno) + ": duplicate factor '" + toks[1] +
                           "'");
        FactorDecl d;
        d.line = lineno;
        d.scope.assign(toks.begin() + 2, toks.end());
        for (const auto& v : d.scope)
          if (!g.has_variable(v))
            throw ParseError("line " + std::to_string(lineno) + ": unknown variable '" + v + "'");
        fpos.emplace(toks[1], factors.size());
        factors.emplace_back(toks[1], std::move(d));
      } else if (cmd == "table") {
        if (toks.size() < 2)
          throw ParseError("line " + std::to_string(lineno) +
                           ": expected 'table <factor-id> <values...>'");
        auto it = fpos.find(toks[1]);
        if (it == fpos.end())
          throw ParseError("line " + std::to_string(lineno) + ": unknown factor '" + toks[1] +
                           "'");
        FactorDecl& d = factors[it->second].second;
        if (d.has_table)
          throw ParseError("line " + std::to_string(lineno) + ": duplicate table for factor '" +
                           toks[1] + "'");
        d.has_table = true;
        d.table_line = lineno;
        for (std::size_t i = 2; i < toks.size(); ++i)
          d.values.push_back(parse_value(toks[i], lineno));
      } else if (cmd == "tree") {
        if (toks.size() != 3)
          throw ParseError("line " + std::to_string(lineno) + ": expected 'tree <var> <factor>'");
        if (!tree_seen.insert({toks[1], toks[2]}).second)
          throw ParseError("line " + std::to_string(lineno) + ": duplicate tree edge");
        tree.push_back({toks[1], toks[2]});
      } else {
        throw ParseError("line " + std::to_string(lineno) + ": unknown directive '" + cmd + "'");
      }
    } catch (const std::invalid_argument& e) {
      throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }

  for (auto& [id, d] : factors) {
    std::vector<int> sizes;
    sizes.reserve(d.scope.size());
    std::size_t total = 1;
    for (const auto& v : d.scope) {
      sizes.push_back(g.variable(v).domain_size);
      total *= static_cast<std::size_t>(sizes.back());
    }
    try {
      FactorTable t = d.has_table
                          ? FactorTable::from_declared(d.scope, sizes, d.values)
                          : FactorTable::from_declared(d.scope, sizes,
                                                       std::vector<double>(total, 1.0));
      g.add_factor(id, std::move(t));
    } catch (const std::invalid_argument& e) {
      int at = d.has_table ? d.table_line : d.line;
      throw ParseError("line " + std::to_string(at) + ": factor '" + id + "': " + e.what());
    }
  }

  try {
    g.set_spanning_tree(tree);
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("tree declaration: ") + e.what());
  }
  return g;
}

std::string serialize_graph(const FactorGraph& g) {
  std::string out;
  for (const auto& v : g.variables())
    out += "var " + v.id + " " + std::to_string(v.domain_size) + "\n";
  for (const auto& fid : g.factor_ids()) {
    const FactorTable& t = g.factor(fid);
    out += "factor " + fid;
    for (const auto& v : t.vars()) out += " " + v;
    out += "\n";
    out += "table " + fid;
    for (double x : t.values()) out += " " + shortest_double(x);
    out += "\n";
  }
  for (const auto& fid : g.factor_ids()) {
    int fi = g.factor_index(fid);
    const auto& scope = g.factor_scope(fi);
    const auto& flags = g.factor_tree_flags(fi);
    for (std::size_t i = 0; i < scope.size(); ++i)
      if (flags[i])
        out += "tree " + g.variable_at(scope[i]).id + " " + fid + "\n";
  }
  return out;
}

UpdateScript parse_script(const std::string& text) {
  UpdateScript script;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto need = [&](const std::vector<std::string>& toks, std::size_t at, const char* what) {
    if (toks.size() <= at)
      throw ParseError("line " + std::to_string(lineno) + ": missing " + what);
    return toks[at];
  };
  while (std::getline(in, line)) {
    ++lineno;
    auto toks = tokenize(line);
    if (toks.empty()) continue;
    UpdateOp op;
    op.line = lineno;
    const std::string& cmd = toks[0];
    std::size_t value_start = 0;
    if (cmd == "query") {
      op.kind = UpdateOp::Kind::Query;
      op.var = need(toks, 1, "vertex id");
    } else if (cmd == "replace_factor") {
      op.kind = UpdateOp::Kind::ReplaceFactor;
      op.factor = need(toks, 1, "factor id");
      value_start = 2;
    } else if (cmd == "insert_nontree" || cmd == "delete_nontree" || cmd == "insert_tree" ||
               cmd == "delete_tree") {
      op.kind = cmd == "insert_nontree"  ? UpdateOp::Kind::InsertNonTree
                : cmd == "delete_nontree" ? UpdateOp::Kind::DeleteNonTree
                : cmd == "insert_tree"    ? UpdateOp::Kind::InsertTree
                                          : UpdateOp::Kind::DeleteTree;
      op.var = need(toks, 1, "variable id");
      op.factor = need(toks, 2, "factor id");
      value_start = 3;
    } else if (cmd == "swap_tree") {
      op.kind = UpdateOp::Kind::SwapTree;
      op.var = need(toks, 1, "tree-edge variable");
      op.factor = need(toks, 2, "tree-edge factor");
      op.var2 = need(toks, 3, "promoted-edge variable");
      op.factor2 = need(toks, 4, "promoted-edge factor");
    } else {
      throw ParseError("line " + std::to_string(lineno) + ": unknown operation '" + cmd + "'");
    }
    if (value_start > 0) {
      for (std::size_t i = value_start; i < toks.size(); ++i)
        op.values.push_back(parse_value(toks[i], lineno));
    }
    script.push_back(std::move(op));
  }
  return script;
}

namespace {

// table over `scope` (canonical order) with the op's inline values
FactorTable table_for(const FactorGraph& g, std::vector<std::string> scope,
                      const std::vector<double>& values, int line) {
  std::sort(scope.begin(), scope.end());
  std::vector<int> sizes;
  sizes.reserve(scope.size());
  for (const auto& v : scope) sizes.push_back(g.variable(v).domain_size);
  try {
    return FactorTable(scope, sizes, values);
  } catch (const std::invalid_argument& e) {
    throw ParseError("line " + std::to_string(line) + ": " + e.what());
  }
}

}  // namespace

std::vector<std::string> apply_script(Engine& engine, const UpdateScript& script) {
  std::vector<std::string> output;
  for (const UpdateOp& op : script) {
    const FactorGraph& g = engine.graph();
    try {
      switch (op.kind) {
        case UpdateOp::Kind::Query:
          output.push_back(format_table_line(op.var, engine.query(op.var)));
          break;
        case UpdateOp::Kind::ReplaceFactor:
          engine.replace_factor(
              op.factor, table_for(g, g.factor(op.factor).vars(), op.values, op.line));
          break;
        case UpdateOp::Kind::InsertNonTree:
        case UpdateOp::Kind::InsertTree: {
          std::vector<std::string> scope = g.factor(op.factor).vars();
          scope.push_back(op.var);
          FactorTable t = table_for(g, std::move(scope), op.values, op.line);
          if (op.kind == UpdateOp::Kind::InsertNonTree)
            engine.insert_nontree_edge(op.var, op.factor, std::move(t));
          else
            engine.insert_tree_edge(op.var, op.factor, std::move(t));
          break;
        }
        case UpdateOp::Kind::DeleteNonTree:
        case UpdateOp::Kind::DeleteTree: {
          std::vector<std::string> scope = g.factor(op.factor).vars();
          auto it = std::find(scope.begin(), scope.end(), op.var);
          if (it == scope.end())
            throw ParseError("line " + std::to_string(op.line) + ": (" + op.var + ", " +
                             op.factor + ") is not an edge");
          scope.erase(it);
          FactorTable t = table_for(g, std::move(scope), op.values, op.line);
          if (op.kind == UpdateOp::Kind::DeleteNonTree)
            engine.delete_nontree_edge(op.var, op.factor, std::move(t));
          else
            engine.delete_tree_edge(op.var, op.factor, std::move(t));
          break;
        }
        case UpdateOp::Kind::SwapTree:
          engine.swap_tree_edge({op.var, op.factor}, {op.var2, op.factor2});
          break;
      }
    } catch (const ParseError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw ParseError("line " + std::to_string(op.line) + ": " + e.what());
    }
  }
  return output;
}

std::string format_table_line(const std::string& id, const FactorTable& t) {
  std::string out = id;
  char buf[64];
  for (double v : t.values()) {
    std::snprintf(buf, sizeof(buf), " %.12g", v);
    out += buf;
  }
  return out;
}

}  // namespace adinfer
