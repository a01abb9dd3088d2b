#pragma once

#include "vinfra/errors.hpp"
#include "vinfra/lp.hpp"
#include "vinfra/topology.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace vinfra {

struct PhysicalNode {
    std::string id;
    double cpu = 0.0;
    std::string rack; // optional label
};

struct PhysicalLink {
    std::string a;
    std::string b;
    double bw = 0.0;
};

// Reserved amounts held by one applied embedding; keys are physical node ids
// and canonical "a|b" link keys.
struct Reservation {
    std::map<std::string, double> node_cpu_primary;
    std::map<std::string, double> node_cpu_redundant;
    std::map<std::string, double> link_bw_primary;
    std::map<std::string, double> link_bw_redundant;
};

std::string link_key(const std::string& a, const std::string& b);

// Substrate with base capacities plus a ledger of applied reservations;
// availability is recomputed from the base so that releasing everything
// restores the initial capacities bit for bit.
class PhysicalNetwork {
  public:
    std::vector<PhysicalNode> nodes;
    std::vector<PhysicalLink> links;

    void validate() const;

    const PhysicalNode* find_node(const std::string& id) const;
    std::optional<std::size_t> link_index(const std::string& a, const std::string& b) const;

    double available_cpu(const std::string& node_id) const;
    double available_bw(std::size_t link_idx) const;

    void apply(const std::string& reservation_id, const Reservation& r); // CapacityError
    void release(const std::string& reservation_id);                    // NotFoundError
    bool has_reservation(const std::string& reservation_id) const;
    const std::map<std::string, Reservation>& reservations() const { return applied_; }

    double total_cpu() const;
    double total_bw() const;
    // aggregate reserved amounts across active reservations
    double reserved_cpu_primary() const;
    double reserved_cpu_redundant() const;
    double reserved_bw_primary() const;
    double reserved_bw_redundant() const;

  private:
    std::map<std::string, Reservation> applied_;
};

enum class OverlapMode {
    // Joint optimization: per-backup scenario rows bound an explicit
    // reservation variable inside the program. Exact, and the most expensive.
    Scenario,
    // Stand-in flows aggregated per (backup, neighbor) and reserved at their
    // plain sum; no reservation variables in the program.
    Verbatim,
    // Same aggregated program as Verbatim, but the applied reservation is the
    // worst case over failure scenarios, computed from the solved flows.
    Posthoc
};

struct EmbeddingProblem {
    ExpandedVInf expanded;
    std::set<std::string> excluded_hosts;  // base virtual nodes may not map here
    std::map<std::string, std::set<std::string>> preferred; // u -> allowed hosts
    bool rack_separation = false;
    std::map<std::string, std::string> pinned; // virtual id -> physical id
    bool omit_l2 = false;                      // pool reuse: L2 already reserved
    bool omit_backup_compute = false;          // pool reuse: compute already reserved
    double backup_compute_override = -1.0;     // >= 0 replaces the backup demand (deficit)
    double l2_demand_override = -1.0;          // >= 0 replaces the L2 demand (deficit)
    double epsilon = 1.0;                      // load-balancing weight offset
    std::optional<double> lambda_big;          // mapping-arc coupling constant
    OverlapMode overlap_mode = OverlapMode::Scenario;
    std::size_t scenario_cap = 1000000;
};

struct CommodityFlow {
    std::string kind; // "E", "L1" or "L2"
    std::string key;  // "u|v", backup "|" critical "|" neighbor, or "a|b"
    std::string source;
    std::string sink;
    double demand = 0.0;
    std::vector<double> arc; // per directed arc: 2*i = a->b of link i, 2*i+1 = b->a
};

struct OverlapFlow {
    std::string neighbor;
    std::vector<double> arc;
};

struct EmbeddingSolution {
    std::string id;
    std::map<std::string, std::string> node_map; // virtual -> physical
    std::vector<CommodityFlow> flows;
    std::vector<OverlapFlow> overlaps;
    double objective = 0.0;
    Reservation reservation; // aggregated per-node and per-link amounts

    bool is_backup_node(const std::string& virtual_id) const {
        return virtual_id.rfind("_bk", 0) == 0;
    }
};

// The adapted multi-commodity-flow program: mapping variables with integral
// flags, four flow families on directed arcs, and the scenario overlap rows.
LinearProgram build_program(const EmbeddingProblem& problem, const PhysicalNetwork& network);

struct EmbedResult {
    std::optional<EmbeddingSolution> solution;
    std::string reject_reason; // set when no solution
};

// LP relaxation, greedy rounding of the mapping variables by descending
// fractional value, then a second LP with the maps fixed.
EmbedResult solve_embedding(const EmbeddingProblem& problem, const PhysicalNetwork& network,
                            const SolveOptions& opts = {});

struct ValidationReport {
    std::map<std::string, double> max_violation; // per constraint family
    std::vector<std::string> messages;
    bool ok(double tol = 1e-6) const;
};

// Re-checks every constraint family directly against the problem data,
// independently of the solver.
ValidationReport validate(const EmbeddingSolution& solution, const EmbeddingProblem& problem,
                          const PhysicalNetwork& network);

} // namespace vinfra
