#include "hyperpart/hypergraph_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace hyperpart::io {

namespace {

// Reads the next line that is neither blank nor a '%' comment. Returns false
// on end of input; `line_no` tracks the physical line for error messages.
bool nextContentLine(std::istream& in, std::string& line, size_t& line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    size_t i = line.find_first_not_of(" \t\r");
    if (i == std::string::npos || line[i] == '%') {
      continue;
    }
    return true;
  }
  return false;
}

std::vector<int64_t> parseInts(const std::string& line, size_t line_no) {
  std::vector<int64_t> values;
  const char* p = line.data();
  const char* end = line.data() + line.size();
  while (p != end) {
    if (*p == ' ' || *p == '\t' || *p == '\r') {
      ++p;
      continue;
    }
    int64_t value = 0;
    auto [next, ec] = std::from_chars(p, end, value);
    if (ec != std::errc()) {
      throw ParseError(line_no, std::string("expected an integer, got '") +
                                    std::string(p, std::min<size_t>(end - p, 16)) +
                                    "'");
    }
    values.push_back(value);
    p = next;
  }
  return values;
}

}  // namespace

ParseResult parseHmetis(std::istream& in) {
  std::string line;
  size_t line_no = 0;

  if (!nextContentLine(in, line, line_no)) {
    throw ParseError(line_no, "missing header");
  }
  auto header = parseInts(line, line_no);
  if (header.size() < 2 || header.size() > 3) {
    throw ParseError(line_no, "header must be 'num_nets num_vertices [fmt]'");
  }
  const int64_t num_nets = header[0];
  const int64_t num_vertices = header[1];
  const int64_t fmt = header.size() == 3 ? header[2] : 0;
  if (num_nets < 0 || num_vertices < 0) {
    throw ParseError(line_no, "negative size in header");
  }
  if (fmt != 0 && fmt != 1 && fmt != 10 && fmt != 11) {
    throw ParseError(line_no, "unsupported fmt " + std::to_string(fmt));
  }
  const bool has_net_weights = (fmt == 1 || fmt == 11);
  const bool has_vertex_weights = (fmt == 10 || fmt == 11);

  std::vector<size_t> net_offsets{0};
  std::vector<VertexID> pins;
  std::vector<Weight> net_weights;
  net_offsets.reserve(num_nets + 1);
  net_weights.reserve(num_nets);

  for (int64_t e = 0; e < num_nets; ++e) {
    if (!nextContentLine(in, line, line_no)) {
      throw ParseError(line_no, "expected net " + std::to_string(e + 1) + " of " +
                                    std::to_string(num_nets));
    }
    auto values = parseInts(line, line_no);
    size_t first_pin = 0;
    Weight w = 1;
    if (has_net_weights) {
      if (values.empty()) {
        throw ParseError(line_no, "net line missing weight");
      }
      w = values[0];
      if (w <= 0) {
        throw ParseError(line_no, "net weight must be positive");
      }
      first_pin = 1;
    }
    for (size_t i = first_pin; i < values.size(); ++i) {
      const int64_t pin = values[i];
      if (pin < 1 || pin > num_vertices) {
        throw ParseError(line_no, "pin " + std::to_string(pin) + " out of range [1, " +
                                      std::to_string(num_vertices) + "]");
      }
      pins.push_back(static_cast<VertexID>(pin - 1));
    }
    net_offsets.push_back(pins.size());
    net_weights.push_back(w);
  }

  std::vector<Weight> vertex_weights;
  if (has_vertex_weights) {
    vertex_weights.reserve(num_vertices);
    for (int64_t v = 0; v < num_vertices; ++v) {
      if (!nextContentLine(in, line, line_no)) {
        throw ParseError(line_no, "expected weight of vertex " + std::to_string(v + 1));
      }
      auto values = parseInts(line, line_no);
      if (values.size() != 1) {
        throw ParseError(line_no, "expected exactly one vertex weight per line");
      }
      if (values[0] <= 0) {
        throw ParseError(line_no, "vertex weight must be positive");
      }
      vertex_weights.push_back(values[0]);
    }
  }

  ParseResult result;
  result.fmt = static_cast<int>(fmt);
  result.hypergraph = Hypergraph::build(static_cast<VertexID>(num_vertices),
                                        std::move(net_offsets), std::move(pins),
                                        std::move(net_weights),
                                        std::move(vertex_weights), &result.stats);
  return result;
}

ParseResult parseHmetisFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open hypergraph file: " + path);
  }
  return parseHmetis(in);
}

void writeHmetis(const Hypergraph& hg, std::ostream& out, bool write_net_weights,
                 bool write_vertex_weights) {
  const int fmt = (write_net_weights ? 1 : 0) + (write_vertex_weights ? 10 : 0);
  out << hg.numNets() << ' ' << hg.numVertices();
  if (fmt != 0) {
    out << ' ' << (fmt == 1 ? "1" : (fmt == 10 ? "10" : "11"));
  }
  out << '\n';
  for (NetID e = 0; e < hg.numNets(); ++e) {
    if (write_net_weights) {
      out << hg.netWeight(e) << ' ';
    }
    const auto pins = hg.pins(e);
    for (size_t i = 0; i < pins.size(); ++i) {
      out << (pins[i] + 1) << (i + 1 == pins.size() ? '\n' : ' ');
    }
  }
  if (write_vertex_weights) {
    for (VertexID v = 0; v < hg.numVertices(); ++v) {
      out << hg.vertexWeight(v) << '\n';
    }
  }
}

void writeHmetisFile(const Hypergraph& hg, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write hypergraph file: " + path);
  }
  writeHmetis(hg, out);
}

std::vector<BlockID> readPartition(std::istream& in, VertexID num_vertices, BlockID k) {
  std::vector<BlockID> part;
  part.reserve(num_vertices);
  std::string line;
  size_t line_no = 0;
  while (nextContentLine(in, line, line_no)) {
    auto values = parseInts(line, line_no);
    for (int64_t v : values) {
      if (v < 0 || v >= k) {
        throw ParseError(line_no, "block id " + std::to_string(v) +
                                      " out of range [0, " + std::to_string(k) + ")");
      }
      part.push_back(static_cast<BlockID>(v));
    }
  }
  if (part.size() != num_vertices) {
    throw ParseError(line_no, "partition has " + std::to_string(part.size()) +
                                  " entries, expected " + std::to_string(num_vertices));
  }
  return part;
}

std::vector<BlockID> readPartitionFile(const std::string& path, VertexID num_vertices,
                                       BlockID k) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open partition file: " + path);
  }
  return readPartition(in, num_vertices, k);
}

void writePartition(const std::vector<BlockID>& part, std::ostream& out) {
  for (BlockID b : part) {
    out << b << '\n';
  }
}

void writePartitionFile(const std::vector<BlockID>& part, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write partition file: " + path);
  }
  writePartition(part, out);
}

}  // namespace hyperpart::io
