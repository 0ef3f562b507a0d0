// Copyright 2026 The adutest Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Wiring of NF instances: every (node, output port) leads to exactly one node.

#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "adutest/adu.hpp"
#include "adutest/errors.hpp"
#include "adutest/nf.hpp"
#include "adutest/nf_library.hpp"

namespace adutest {

using EdgeId = int;

struct Edge {
  EdgeId id = -1;
  NodeId from;
  PortName from_port;
  NodeId to;
  PortName to_port;  // ingress port name at `to`

  std::string label() const { return from + ":" + from_port + "->" + to; }
};

struct Node {
  NodeId id;
  std::string type;
  Json config;
  NfPtr nf;
};

class Topology {
 public:
  static Topology from_json(const Json& j) {
    Topology t;
    t.json_ = j;
    if (!j.contains("nodes") || !j.contains("edges")) {
      throw TopologyError("topology needs 'nodes' and 'edges'");
    }
    for (const auto& n : j.at("nodes")) {
      Node node;
      node.id = n.at("id").get<std::string>();
      node.type = n.at("type").get<std::string>();
      node.config = n.value("config", Json::object());
      if (t.index_.count(node.id)) throw TopologyError("duplicate node id " + node.id);
      node.nf = make_nf(node.id, node.type, node.config);
      t.index_[node.id] = t.nodes_.size();
      t.nodes_.push_back(std::move(node));
    }
    for (const auto& e : j.at("edges")) {
      Edge edge;
      edge.id = static_cast<EdgeId>(t.edges_.size());
      edge.from = e.at("from").get<std::string>();
      edge.from_port = e.at("fromPort").get<std::string>();
      edge.to = e.at("to").get<std::string>();
      edge.to_port = e.value("toPort", std::string{});
      if (!t.index_.count(edge.from) || !t.index_.count(edge.to)) {
        throw TopologyError("edge " + edge.label() + " references an unknown node");
      }
      auto key = std::make_pair(edge.from, edge.from_port);
      if (t.out_.count(key)) throw TopologyError("output port mapped twice: " + edge.label());
      t.out_[key] = edge.id;
      t.edges_.push_back(std::move(edge));
    }
    // Ingress port names default to the port the receiver uses to talk back.
    for (auto& edge : t.edges_) {
      if (!edge.to_port.empty()) continue;
      std::vector<PortName> back;
      for (const auto& other : t.edges_) {
        if (other.from == edge.to && other.to == edge.from) back.push_back(other.from_port);
      }
      if (back.size() == 1) edge.to_port = back.front();
    }
    for (const auto& s : j.value("sources", Json::array())) t.sources_.push_back(s.get<std::string>());
    for (const auto& s : j.value("sinks", Json::array())) t.sinks_.insert(s.get<std::string>());
    if (t.sources_.empty()) {
      for (const auto& n : t.nodes_) {
        if (n.type == "host") t.sources_.push_back(n.id);
      }
    }
    if (t.sinks_.empty()) {
      for (const auto& n : t.nodes_) {
        if (n.type == "host") t.sinks_.insert(n.id);
      }
    }
    t.validate();
    return t;
  }

  const Json& json() const { return json_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(EdgeId id) const { return edges_.at(static_cast<std::size_t>(id)); }
  const std::vector<NodeId>& sources() const { return sources_; }
  const std::set<NodeId>& sinks() const { return sinks_; }

  bool has_node(const NodeId& id) const { return index_.count(id) > 0; }
  const Node& node(const NodeId& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw TopologyError("unknown node " + id);
    return nodes_[it->second];
  }
  std::size_t node_index(const NodeId& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw TopologyError("unknown node " + id);
    return it->second;
  }
  const NetworkFunction& nf(const NodeId& id) const { return *node(id).nf; }

  std::optional<EdgeId> out_edge(const NodeId& node, const PortName& port) const {
    auto it = out_.find({node, port});
    if (it == out_.end()) return std::nullopt;
    return it->second;
  }

  std::vector<EdgeId> edges_from(const NodeId& node) const {
    std::vector<EdgeId> out;
    for (const auto& e : edges_) {
      if (e.from == node) out.push_back(e.id);
    }
    return out;
  }

  // Parses "node:port" into the edge leaving that port.
  EdgeId parse_port(const std::string& spec) const {
    auto colon = spec.find(':');
    if (colon == std::string::npos) throw TopologyError("port spec must be node:port, got " + spec);
    auto e = out_edge(spec.substr(0, colon), spec.substr(colon + 1));
    if (!e) throw TopologyError("no such port: " + spec);
    return *e;
  }
  std::string port_spec(EdgeId e) const { return edge(e).from + ":" + edge(e).from_port; }

  bool is_sink(const NodeId& id) const { return sinks_.count(id) > 0; }
  bool is_source(const NodeId& id) const {
    return std::find(sources_.begin(), sources_.end(), id) != sources_.end();
  }

  // Host id of an end host, if the node is one.
  std::optional<int> host_ip(const NodeId& id) const {
    const Node& n = node(id);
    if (n.type != "host") return std::nullopt;
    return static_cast<const Host&>(*n.nf).ip();
  }

  std::optional<NodeId> host_by_ip(int ip) const {
    for (const auto& n : nodes_) {
      if (n.type == "host" && static_cast<const Host&>(*n.nf).ip() == ip) return n.id;
    }
    return std::nullopt;
  }

  std::vector<int> host_ips() const {
    std::vector<int> out;
    for (const auto& n : nodes_) {
      if (n.type == "host") out.push_back(static_cast<const Host&>(*n.nf).ip());
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  // Objects declared by web servers.
  std::vector<int> object_ids() const {
    std::set<int> objs;
    for (const auto& n : nodes_) {
      if (n.type != "host") continue;
      for (int o : static_cast<const Host&>(*n.nf).objects()) objs.insert(o);
    }
    return {objs.begin(), objs.end()};
  }

  // The single port a source host injects on.
  EdgeId injection_edge(const NodeId& source) const {
    auto out = edges_from(source);
    if (out.size() != 1) throw TopologyError("source " + source + " must have exactly one output port");
    return out.front();
  }

  bool is_stateful(const NodeId& id) const { return node(id).nf->stateful(); }

  // Edges touching a stateful NF; StatefulPortsOnly watches exactly these.
  bool edge_adjacent_to_stateful(EdgeId e) const {
    return is_stateful(edge(e).from) || is_stateful(edge(e).to);
  }

 private:
  void validate() const {
    if (sinks_.empty()) throw TopologyError("topology needs at least one sink");
    for (const auto& s : sources_) {
      if (!has_node(s)) throw TopologyError("unknown source " + s);
    }
    for (const auto& s : sinks_) {
      if (!has_node(s)) throw TopologyError("unknown sink " + s);
    }
  }

  Json json_;
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::map<NodeId, std::size_t> index_;
  std::map<std::pair<NodeId, PortName>, EdgeId> out_;
  std::vector<NodeId> sources_;
  std::set<NodeId> sinks_;
};

}  // namespace adutest
