#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "hyperpart/hypergraph.hpp"
#include "hyperpart/types.hpp"

namespace hyperpart::io {

class ParseError : public std::runtime_error {
 public:
  ParseError(size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        _line(line) {}
  size_t line() const { return _line; }

 private:
  size_t _line;
};

struct ParseResult {
  Hypergraph hypergraph;
  Hypergraph::BuildStats stats;
  int fmt = 0;
};

// hMetis format: header "num_nets num_vertices [fmt]" with fmt 1 = net
// weights, 10 = vertex weights, 11 = both; one net per line, pins 1-indexed;
// '%' starts a comment line. Nets that end up with fewer than two distinct
// pins are dropped and counted in `stats`.
ParseResult parseHmetis(std::istream& in);
ParseResult parseHmetisFile(const std::string& path);

void writeHmetis(const Hypergraph& hg, std::ostream& out,
                 bool write_net_weights = true, bool write_vertex_weights = true);
void writeHmetisFile(const Hypergraph& hg, const std::string& path);

// Partition files: one block id per line, line i = block of vertex i.
std::vector<BlockID> readPartition(std::istream& in, VertexID num_vertices, BlockID k);
std::vector<BlockID> readPartitionFile(const std::string& path, VertexID num_vertices,
                                       BlockID k);
void writePartition(const std::vector<BlockID>& part, std::ostream& out);
void writePartitionFile(const std::vector<BlockID>& part, const std::string& path);

}  // namespace hyperpart::io
