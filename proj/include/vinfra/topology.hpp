#pragma once

#include "vinfra/cascade.hpp"
#include "vinfra/errors.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace vinfra {

struct VInfNode {
    std::string id;
    double cpu = 0.0;
    bool critical = false;
};

struct VInfEdge {
    std::string a;
    std::string b;
    double bw = 0.0;
};

// A resource lease request: an undirected graph of compute nodes with
// bandwidth-weighted links, a critical subset and a reliability target.
struct VInfRequest {
    std::vector<VInfNode> nodes;
    std::vector<VInfEdge> edges;
    double reliability = 0.0; // 0 means no guarantee requested
    double failure_p = 0.0;   // per-node physical failure probability
    std::optional<CascadeModel> cascade_model; // overrides independent failures

    void validate() const; // throws SchemaError
    std::vector<std::string> critical_ids() const; // sorted
    const VInfNode* find(const std::string& id) const;

    // Failure distribution over the critical set, per the request's model.
    FailureDistribution failure_distribution() const;
};

// One redundant flow: backup (by index) stands in for critical node
// `critical` toward its neighbor `neighbor` with the original edge demand.
struct RedundantFlow {
    std::size_t backup = 0;
    std::string critical;
    std::string neighbor;
    double demand = 0.0;
};

struct ExpandedVInf {
    VInfRequest base;
    std::size_t k = 0;
    double backup_cpu = 0.0;              // max critical compute demand
    std::vector<std::string> backup_ids;  // "_bk0", "_bk1", ...
    std::vector<RedundantFlow> l1;        // triples (a, c, v)
    std::vector<std::pair<std::size_t, std::size_t>> l2; // backup index pairs, a < b
    double l2_demand = 0.0;               // max bandwidth between adjacent criticals
};

// Augment a request with k backup nodes and the redundant link sets.
ExpandedVInf expand(const VInfRequest& vinf, std::size_t k);

// All critical subsets of size 1..min(k, |C|) in deterministic order (by
// size, then lexicographic). Throws SizeError beyond the subset cap.
std::vector<std::vector<std::string>> scenario_set(const ExpandedVInf& expanded,
                                                   std::size_t cap = 1000000);

} // namespace vinfra
