#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <utility>

#include "adinfer/bench.hpp"
#include "adinfer/chain_gen.hpp"
#include "adinfer/engine.hpp"
#include "adinfer/graph_io.hpp"

namespace py = pybind11;
using namespace adinfer;

namespace {

using PyEdge = std::pair<std::string, std::string>;

EdgeRef to_edge(const PyEdge& e) { return {e.first, e.second}; }

std::vector<PyEdge> from_edges(const std::vector<EdgeRef>& edges) {
  std::vector<PyEdge> out;
  out.reserve(edges.size());
  for (const auto& e : edges) out.emplace_back(e.var, e.factor);
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "adaptive exact inference on discrete factor graphs";

  py::class_<FactorTable>(m, "FactorTable")
      .def(py::init<std::vector<std::string>, std::vector<int>, std::vector<double>>(),
           py::arg("vars"), py::arg("sizes"), py::arg("values"))
      .def_static("scalar", &FactorTable::scalar, py::arg("value"))
      .def_static("constant", &FactorTable::constant, py::arg("vars"), py::arg("sizes"),
                  py::arg("value"))
      .def_static("from_declared", &FactorTable::from_declared, py::arg("vars"),
                  py::arg("sizes"), py::arg("values"))
      .def_property_readonly("vars", &FactorTable::vars)
      .def_property_readonly("sizes", &FactorTable::sizes)
      .def_property_readonly("values", &FactorTable::values)
      .def("__len__", &FactorTable::size)
      .def("multiply", &FactorTable::multiply)
      .def("__mul__", &FactorTable::multiply)
      .def("marginalize",
           [](const FactorTable& t, const std::vector<std::string>& keep) {
             return t.marginalize(keep);
           },
           py::arg("keep"))
      .def("normalize", &FactorTable::normalize)
      .def("scaled", &FactorTable::scaled)
      .def("total_mass", &FactorTable::total_mass)
      .def("value_at",
           [](const FactorTable& t, const std::vector<int>& states) {
             return t.value_at(states);
           },
           py::arg("states"))
      .def("approx_equal", &FactorTable::approx_equal, py::arg("other"),
           py::arg("rtol") = 1e-9, py::arg("atol") = 1e-12)
      .def("__repr__", [](const FactorTable& t) {
        return "<FactorTable over " + std::to_string(t.arity()) + " vars, " +
               std::to_string(t.size()) + " entries>";
      });

  py::class_<VariableInfo>(m, "VariableInfo")
      .def_readonly("id", &VariableInfo::id)
      .def_readonly("domain_size", &VariableInfo::domain_size)
      .def("__repr__", [](const VariableInfo& v) {
        return "<VariableInfo " + v.id + " d=" + std::to_string(v.domain_size) + ">";
      });

  py::class_<FactorGraph>(m, "FactorGraph")
      .def(py::init<>())
      .def("add_variable", &FactorGraph::add_variable, py::arg("id"), py::arg("domain_size"))
      .def("add_factor", &FactorGraph::add_factor, py::arg("id"), py::arg("table"))
      .def("set_spanning_tree",
           [](FactorGraph& g, const std::vector<PyEdge>& edges) {
             std::vector<EdgeRef> refs;
             refs.reserve(edges.size());
             for (const auto& e : edges) refs.push_back(to_edge(e));
             g.set_spanning_tree(refs);
           },
           py::arg("edges"))
      .def_property_readonly("num_variables", &FactorGraph::num_variables)
      .def_property_readonly("num_factors", &FactorGraph::num_factors)
      .def_property_readonly("variables", &FactorGraph::variables)
      .def("factor", &FactorGraph::factor, py::arg("id"))
      .def("factor_ids", &FactorGraph::factor_ids)
      .def("has_edge", &FactorGraph::has_edge)
      .def("is_tree_edge", &FactorGraph::is_tree_edge)
      .def("edges", [](const FactorGraph& g) { return from_edges(g.edges()); })
      .def("tree_edges", [](const FactorGraph& g) { return from_edges(g.tree_edges()); })
      .def("nontree_edges", [](const FactorGraph& g) { return from_edges(g.nontree_edges()); })
      .def("measure_edge",
           [](const FactorGraph& g, const PyEdge& e) { return g.measure_edge(to_edge(e)); },
           py::arg("edge"))
      .def("measure_graph", &FactorGraph::measure_graph)
      .def("characteristic", &FactorGraph::characteristic)
      .def("validate_tree_cut",
           [](const FactorGraph& g, const PyEdge& e) { return g.validate_tree_cut(to_edge(e)); },
           py::arg("edge"))
      .def("joint_eval", &FactorGraph::joint_eval, py::arg("assignment"))
      .def("brute_force_marginal", &FactorGraph::brute_force_marginal, py::arg("var"))
      .def("brute_force_marginals", &FactorGraph::brute_force_marginals)
      .def("brute_force_partition", &FactorGraph::brute_force_partition)
      .def("validate", &FactorGraph::validate)
      .def("__repr__", [](const FactorGraph& g) {
        return "<FactorGraph " + std::to_string(g.num_variables()) + " vars, " +
               std::to_string(g.num_factors()) + " factors>";
      });

  py::class_<Engine>(m, "Engine")
      .def(py::init<FactorGraph, std::uint64_t>(), py::arg("graph"), py::arg("seed") = 1)
      .def_property_readonly("graph", &Engine::graph)
      .def_property_readonly("seed", &Engine::seed)
      .def("query", &Engine::query, py::arg("vertex_id"))
      .def("partition_function", &Engine::partition_function)
      .def("replace_factor", &Engine::replace_factor, py::arg("factor_id"), py::arg("table"))
      .def("insert_nontree_edge", &Engine::insert_nontree_edge, py::arg("var"),
           py::arg("factor"), py::arg("table"))
      .def("delete_nontree_edge", &Engine::delete_nontree_edge, py::arg("var"),
           py::arg("factor"), py::arg("table"))
      .def("insert_tree_edge", &Engine::insert_tree_edge, py::arg("var"), py::arg("factor"),
           py::arg("table"))
      .def("delete_tree_edge", &Engine::delete_tree_edge, py::arg("var"), py::arg("factor"),
           py::arg("table"))
      .def("swap_tree_edge",
           [](Engine& e, const PyEdge& rm, const PyEdge& add) {
             e.swap_tree_edge(to_edge(rm), to_edge(add));
           },
           py::arg("remove"), py::arg("add"))
      .def("touched_clusters", &Engine::touched_clusters)
      .def("last_recomputed", &Engine::last_recomputed)
      .def("depth", &Engine::depth)
      .def("cluster_count", &Engine::cluster_count)
      .def("boundary", &Engine::boundary, py::arg("vertex_id"))
      .def("tree_boundary", &Engine::tree_boundary, py::arg("vertex_id"))
      .def("boundary_vars", &Engine::boundary_vars, py::arg("vertex_id"))
      .def("cluster_fn", &Engine::cluster_fn, py::arg("vertex_id"))
      .def("check_invariants", &Engine::check_invariants)
      .def("__repr__", [](const Engine& e) {
        return "<Engine " + std::to_string(e.cluster_count()) + " clusters, depth " +
               std::to_string(e.depth()) + ">";
      });

  m.def("parse_graph", &parse_graph, py::arg("text"));
  m.def("serialize_graph", &serialize_graph, py::arg("graph"));
  m.def("apply_script_text",
        [](Engine& e, const std::string& text) { return apply_script(e, parse_script(text)); },
        py::arg("engine"), py::arg("script_text"));
  m.def("gen_chain", &gen_chain, py::arg("n"), py::arg("k"), py::arg("l"), py::arg("seed") = 1);
  m.def("run_bench_csv",
        [](const std::vector<int>& sizes, int trials, std::uint64_t seed) {
          return run_bench(sizes, trials, seed).to_csv();
        },
        py::arg("sizes"), py::arg("trials"), py::arg("seed") = 1);

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
}
