#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "adinfer/engine.hpp"
#include "adinfer/factor_graph.hpp"

namespace adinfer {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Line-oriented graph format, '#' starts a comment:
///
///   var <id> <domain>
///   factor <id> <var ids...>
///   table <factor-id> <values...>
///   tree <var-id> <factor-id>
///
/// A factor line declares the scope in any order; its table values are laid
/// out in that declared order (last declared variable fastest) and are
/// re-ordered to the canonical sorted scope internally. A factor without a
/// table line gets all entries set to 1. Edges without a tree line are
/// non-tree; the tree lines together must form a spanning forest.
FactorGraph parse_graph(const std::string& text);
std::string serialize_graph(const FactorGraph& g);

/// One replayable model edit (or query). Table values are given over the
/// resulting scope in canonical (sorted) order.
struct UpdateOp {
  enum class Kind {
    Query,          // query <vertex>
    ReplaceFactor,  // replace_factor <factor> <values...>
    InsertNonTree,  // insert_nontree <var> <factor> <values...>
    DeleteNonTree,  // delete_nontree <var> <factor> <values...>
    InsertTree,     // insert_tree <var> <factor> <values...>
    DeleteTree,     // delete_tree <var> <factor> <values...>
    SwapTree,       // swap_tree <rm-var> <rm-factor> <add-var> <add-factor>
  };
  Kind kind;
  int line = 0;
  std::string var;     // or queried vertex
  std::string factor;  // primary factor id
  std::string var2;    // swap: promoted edge
  std::string factor2;
  std::vector<double> values;
};

using UpdateScript = std::vector<UpdateOp>;

UpdateScript parse_script(const std::string& text);

/// Replays a script against the engine; returns one output line per query
/// op, formatted like the `query` CLI subcommand.
std::vector<std::string> apply_script(Engine& engine, const UpdateScript& script);

/// "<id> v1 v2 ..." with 12 significant digits.
std::string format_table_line(const std::string& id, const FactorTable& t);

}  // namespace adinfer
