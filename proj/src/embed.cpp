#include "vinfra/embed.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vinfra {

std::string link_key(const std::string& a, const std::string& b) {
    return a < b ? a + "|" + b : b + "|" + a;
}

void PhysicalNetwork::validate() const {
    std::set<std::string> seen;
    for (const auto& n : nodes) {
        if (n.id.empty()) throw SchemaError("physical: empty node id");
        if (!seen.insert(n.id).second) throw SchemaError("physical: duplicate node " + n.id);
        if (n.cpu < 0.0) throw SchemaError("physical: negative capacity on " + n.id);
    }
    std::set<std::string> keys;
    for (const auto& l : links) {
        if (l.a == l.b) throw SchemaError("physical: self link on " + l.a);
        if (!seen.count(l.a) || !seen.count(l.b))
            throw SchemaError("physical: link references unknown node");
        if (l.bw < 0.0) throw SchemaError("physical: negative bandwidth");
        if (!keys.insert(link_key(l.a, l.b)).second)
            throw SchemaError("physical: duplicate link " + l.a + "-" + l.b);
    }
}

const PhysicalNode* PhysicalNetwork::find_node(const std::string& id) const {
    for (const auto& n : nodes)
        if (n.id == id) return &n;
    return nullptr;
}

std::optional<std::size_t> PhysicalNetwork::link_index(const std::string& a,
                                                       const std::string& b) const {
    const auto key = link_key(a, b);
    for (std::size_t i = 0; i < links.size(); ++i)
        if (link_key(links[i].a, links[i].b) == key) return i;
    return std::nullopt;
}

double PhysicalNetwork::available_cpu(const std::string& node_id) const {
    const auto* n = find_node(node_id);
    if (!n) throw NotFoundError("physical: unknown node " + node_id);
    double avail = n->cpu;
    for (const auto& [id, r] : applied_) {
        (void)id;
        if (const auto it = r.node_cpu_primary.find(node_id); it != r.node_cpu_primary.end())
            avail -= it->second;
        if (const auto it = r.node_cpu_redundant.find(node_id); it != r.node_cpu_redundant.end())
            avail -= it->second;
    }
    return avail;
}

double PhysicalNetwork::available_bw(std::size_t link_idx) const {
    const auto& l = links.at(link_idx);
    const auto key = link_key(l.a, l.b);
    double avail = l.bw;
    for (const auto& [id, r] : applied_) {
        (void)id;
        if (const auto it = r.link_bw_primary.find(key); it != r.link_bw_primary.end())
            avail -= it->second;
        if (const auto it = r.link_bw_redundant.find(key); it != r.link_bw_redundant.end())
            avail -= it->second;
    }
    return avail;
}

void PhysicalNetwork::apply(const std::string& reservation_id, const Reservation& r) {
    if (applied_.count(reservation_id))
        throw std::invalid_argument("physical: reservation id already applied: " + reservation_id);
    std::map<std::string, double> node_need;
    for (const auto& [id, amt] : r.node_cpu_primary) node_need[id] += amt;
    for (const auto& [id, amt] : r.node_cpu_redundant) node_need[id] += amt;
    for (const auto& [id, amt] : node_need)
        if (amt > available_cpu(id) + 1e-9)
            throw CapacityError("physical: compute oversubscription on " + id);
    std::map<std::string, double> link_need;
    for (const auto& [key, amt] : r.link_bw_primary) link_need[key] += amt;
    for (const auto& [key, amt] : r.link_bw_redundant) link_need[key] += amt;
    for (const auto& [key, amt] : link_need) {
        bool found = false;
        for (std::size_t i = 0; i < links.size(); ++i) {
            if (link_key(links[i].a, links[i].b) == key) {
                if (amt > available_bw(i) + 1e-9)
                    throw CapacityError("physical: bandwidth oversubscription on " + key);
                found = true;
                break;
            }
        }
        if (!found) throw NotFoundError("physical: reservation references unknown link " + key);
    }
    applied_.emplace(reservation_id, r);
}

void PhysicalNetwork::release(const std::string& reservation_id) {
    if (!applied_.erase(reservation_id))
        throw NotFoundError("physical: no applied reservation " + reservation_id);
}

bool PhysicalNetwork::has_reservation(const std::string& reservation_id) const {
    return applied_.count(reservation_id) > 0;
}

double PhysicalNetwork::total_cpu() const {
    double t = 0.0;
    for (const auto& n : nodes) t += n.cpu;
    return t;
}

double PhysicalNetwork::total_bw() const {
    double t = 0.0;
    for (const auto& l : links) t += l.bw;
    return t;
}

namespace {

double sum_map(const std::map<std::string, double>& m) {
    double t = 0.0;
    for (const auto& [k, v] : m) {
        (void)k;
        t += v;
    }
    return t;
}

} // namespace

double PhysicalNetwork::reserved_cpu_primary() const {
    double t = 0.0;
    for (const auto& [id, r] : applied_) {
        (void)id;
        t += sum_map(r.node_cpu_primary);
    }
    return t;
}
double PhysicalNetwork::reserved_cpu_redundant() const {
    double t = 0.0;
    for (const auto& [id, r] : applied_) {
        (void)id;
        t += sum_map(r.node_cpu_redundant);
    }
    return t;
}
double PhysicalNetwork::reserved_bw_primary() const {
    double t = 0.0;
    for (const auto& [id, r] : applied_) {
        (void)id;
        t += sum_map(r.link_bw_primary);
    }
    return t;
}
double PhysicalNetwork::reserved_bw_redundant() const {
    double t = 0.0;
    for (const auto& [id, r] : applied_) {
        (void)id;
        t += sum_map(r.link_bw_redundant);
    }
    return t;
}

bool ValidationReport::ok(double tol) const {
    for (const auto& [family, v] : max_violation) {
        (void)family;
        if (v > tol) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------

namespace {

struct Commodity {
    std::string kind;
    std::string key;
    std::string source;
    std::string sink;
    double demand = 0.0;
};

struct CommodityVars {
    std::vector<std::size_t> phys;                        // 2 * L
    std::vector<std::pair<std::size_t, std::size_t>> src; // (host idx, var)
    std::vector<std::pair<std::size_t, std::size_t>> snk; // (host idx, var)
};

struct Build {
    LinearProgram lp;
    std::vector<std::string> virtuals;                    // N then B, request order
    std::map<std::string, double> vdemand;                // effective compute demand
    std::map<std::string, std::vector<std::size_t>> cand; // virtual -> physical node indices
    std::map<std::string, std::map<std::size_t, std::size_t>> rho;
    std::vector<Commodity> commodities;
    std::vector<CommodityVars> cvars;
    std::vector<std::string> overlap_neighbors;           // sorted distinct v
    std::map<std::string, std::vector<std::size_t>> ovar; // v -> per-arc vars (2L)
    double lambda_big = 0.0;
};

// effective compute demand for each virtual node of the expanded graph
std::map<std::string, double> demand_map(const EmbeddingProblem& p) {
    std::map<std::string, double> d;
    for (const auto& n : p.expanded.base.nodes) d[n.id] = n.cpu;
    double bk = p.expanded.backup_cpu;
    if (p.omit_backup_compute) bk = 0.0;
    if (p.backup_compute_override >= 0.0) bk = p.backup_compute_override;
    for (const auto& b : p.expanded.backup_ids) d[b] = bk;
    return d;
}

double effective_l2_demand(const EmbeddingProblem& p) {
    if (p.omit_l2) return 0.0;
    if (p.l2_demand_override >= 0.0) return p.l2_demand_override;
    return p.expanded.l2_demand;
}

// maximal distinguishable failure subsets among v's critical neighbors;
// smaller scenarios are dominated because flows are non-negative
std::vector<std::vector<std::string>> maximal_subsets(const std::vector<std::string>& pool,
                                                      std::size_t size) {
    std::vector<std::vector<std::string>> out;
    if (pool.empty() || size == 0) return out;
    size = std::min(size, pool.size());
    std::vector<std::size_t> pick(size);
    for (std::size_t i = 0; i < size; ++i) pick[i] = i;
    bool more = true;
    while (more) {
        std::vector<std::string> s;
        for (auto i : pick) s.push_back(pool[i]);
        out.push_back(std::move(s));
        more = false;
        for (std::size_t i = size; i-- > 0;) {
            if (pick[i] + (size - i) < pool.size()) {
                ++pick[i];
                for (std::size_t j = i + 1; j < size; ++j) pick[j] = pick[j - 1] + 1;
                more = true;
                break;
            }
        }
    }
    return out;
}

// fraction of a neighbor's total stand-in demand that the worst failure
// scenario can activate through one backup: top-min(k, q) demands over all
std::map<std::string, double> overlap_scenario_weights(const ExpandedVInf& x) {
    std::map<std::string, std::vector<double>> lam;
    for (const auto& t : x.l1)
        if (t.backup == 0) lam[t.neighbor].push_back(t.demand);
    std::map<std::string, double> wstar;
    for (auto& [v, d] : lam) {
        std::sort(d.begin(), d.end(), std::greater<>());
        const std::size_t m = std::min(x.k, d.size());
        double top = 0.0, total = 0.0;
        for (std::size_t i = 0; i < d.size(); ++i) {
            total += d[i];
            if (i < m) top += d[i];
        }
        wstar[v] = total > 0.0 ? top / total : 0.0;
    }
    return wstar;
}

Build assemble(const EmbeddingProblem& problem, const PhysicalNetwork& net,
               const std::map<std::string, std::string>* fixed) {
    problem.expanded.base.validate();
    net.validate();
    const auto& x = problem.expanded;
    Build b;
    b.vdemand = demand_map(problem);

    for (const auto& n : x.base.nodes) b.virtuals.push_back(n.id);
    for (const auto& bk : x.backup_ids) b.virtuals.push_back(bk);

    {
        std::set<std::string> targets;
        for (const auto& [u, mu] : problem.pinned) {
            if (!net.find_node(mu)) throw NotFoundError("embed: pinned host " + mu + " not found");
            if (std::find(b.virtuals.begin(), b.virtuals.end(), u) == b.virtuals.end())
                throw NotFoundError("embed: pinned virtual node " + u + " not in the request");
            if (!targets.insert(mu).second)
                throw std::invalid_argument("embed: pinned maps collide on host " + mu);
        }
    }

    const std::set<std::string> base_set = [&] {
        std::set<std::string> s;
        for (const auto& n : x.base.nodes) s.insert(n.id);
        return s;
    }();

    // candidate hosts per virtual node
    for (const auto& u : b.virtuals) {
        std::vector<std::size_t> hosts;
        for (std::size_t m = 0; m < net.nodes.size(); ++m) {
            const auto& mu = net.nodes[m];
            if (fixed) {
                if (fixed->at(u) == mu.id) hosts.push_back(m);
                continue;
            }
            if (problem.pinned.count(u)) {
                if (problem.pinned.at(u) == mu.id) hosts.push_back(m);
                continue;
            }
            if (base_set.count(u) && problem.excluded_hosts.count(mu.id)) continue;
            if (const auto pref = problem.preferred.find(u); pref != problem.preferred.end())
                if (!pref->second.count(mu.id)) continue;
            if (b.vdemand.at(u) > net.available_cpu(mu.id) + 1e-9) continue;
            hosts.push_back(m);
        }
        b.cand[u] = std::move(hosts);
    }

    // commodities: base edges, backup stand-in flows, backup interconnects
    const bool aggregated = problem.overlap_mode != OverlapMode::Scenario;
    for (const auto& e : x.base.edges)
        b.commodities.push_back({"E", e.a + "|" + e.b, e.a, e.b, e.bw});
    if (!aggregated) {
        for (const auto& t : x.l1)
            b.commodities.push_back({"L1",
                                     x.backup_ids[t.backup] + "|" + t.critical + "|" + t.neighbor,
                                     x.backup_ids[t.backup], t.neighbor, t.demand});
    } else {
        // one commodity per (backup, neighbor) carrying the summed stand-in
        // demand; per-critical flows are recovered by proportional splitting
        std::map<std::pair<std::size_t, std::string>, double> agg;
        for (const auto& t : x.l1) agg[{t.backup, t.neighbor}] += t.demand;
        for (const auto& [key, demand] : agg)
            b.commodities.push_back({"L1", x.backup_ids[key.first] + "|*|" + key.second,
                                     x.backup_ids[key.first], key.second, demand});
    }
    const double l2d = effective_l2_demand(problem);
    if (l2d > 0.0)
        for (const auto& [ai, bi] : x.l2)
            b.commodities.push_back({"L2", x.backup_ids[ai] + "|" + x.backup_ids[bi],
                                     x.backup_ids[ai], x.backup_ids[bi], l2d});

    double demand_total = 0.0;
    for (const auto& c : b.commodities) demand_total += c.demand;
    b.lambda_big = problem.lambda_big.value_or(demand_total + 1.0);

    {
        std::set<std::string> vs;
        for (const auto& t : x.l1) vs.insert(t.neighbor);
        b.overlap_neighbors.assign(vs.begin(), vs.end());
    }
    const bool explicit_overlap_vars = !aggregated;

    const std::size_t L = net.links.size();
    auto& lp = b.lp;

    if (!fixed) {
        for (const auto& u : b.virtuals) {
            b.rho[u]; // nodes without any viable host keep an empty entry
            for (std::size_t m : b.cand.at(u))
                b.rho[u][m] = lp.add_variable("rho|" + u + "|" + net.nodes[m].id, 0.0, 1.0, true);
        }
    }

    for (const auto& c : b.commodities) {
        CommodityVars cv;
        cv.phys.resize(2 * L);
        for (std::size_t a = 0; a < 2 * L; ++a)
            cv.phys[a] = lp.add_variable("f|" + c.kind + "|" + c.key + "|p" + std::to_string(a));
        for (std::size_t m : b.cand.at(c.source))
            cv.src.emplace_back(
                m, lp.add_variable("f|" + c.kind + "|" + c.key + "|s|" + net.nodes[m].id));
        for (std::size_t m : b.cand.at(c.sink))
            cv.snk.emplace_back(
                m, lp.add_variable("f|" + c.kind + "|" + c.key + "|t|" + net.nodes[m].id));
        b.cvars.push_back(std::move(cv));
    }
    if (explicit_overlap_vars) {
        for (const auto& v : b.overlap_neighbors) {
            auto& vars = b.ovar[v];
            vars.resize(2 * L);
            for (std::size_t a = 0; a < 2 * L; ++a)
                vars[a] = lp.add_variable("o|" + v + "|p" + std::to_string(a));
        }
    }

    // mapping constraints
    if (!fixed) {
        for (const auto& u : b.virtuals) {
            std::vector<std::pair<std::size_t, double>> terms;
            for (const auto& [m, var] : b.rho.at(u)) {
                (void)m;
                terms.emplace_back(var, 1.0);
            }
            // an empty sum leaves 0 = 1, the correct fate for a node with no
            // viable host
            lp.add_constraint("onemap|" + u, std::move(terms), Relation::Equal, 1.0);
        }
        for (std::size_t m = 0; m < net.nodes.size(); ++m) {
            std::vector<std::pair<std::size_t, double>> terms;
            for (const auto& u : b.virtuals) {
                const auto it = b.rho.at(u).find(m);
                if (it != b.rho.at(u).end()) terms.emplace_back(it->second, 1.0);
            }
            if (!terms.empty())
                lp.add_constraint("nooverlap|" + net.nodes[m].id, std::move(terms),
                                  Relation::LessEqual, 1.0);
        }
        if (problem.rack_separation) {
            std::map<std::string, std::vector<std::pair<std::size_t, double>>> rack_terms;
            for (const auto& u : b.virtuals) {
                if (!base_set.count(u)) continue;
                for (const auto& [m, var] : b.rho.at(u))
                    if (!net.nodes[m].rack.empty())
                        rack_terms[net.nodes[m].rack].emplace_back(var, 1.0);
            }
            for (auto& [rack, terms] : rack_terms)
                lp.add_constraint("rack|" + rack, std::move(terms), Relation::LessEqual, 1.0);
        }
        for (std::size_t m = 0; m < net.nodes.size(); ++m) {
            std::vector<std::pair<std::size_t, double>> terms;
            for (const auto& u : b.virtuals) {
                const auto it = b.rho.at(u).find(m);
                if (it != b.rho.at(u).end() && b.vdemand.at(u) != 0.0)
                    terms.emplace_back(it->second, b.vdemand.at(u));
            }
            lp.add_constraint("compute|" + net.nodes[m].id, std::move(terms), Relation::LessEqual,
                              net.available_cpu(net.nodes[m].id));
        }
    }

    // flow conservation
    for (std::size_t ci = 0; ci < b.commodities.size(); ++ci) {
        const auto& c = b.commodities[ci];
        const auto& cv = b.cvars[ci];
        {
            std::vector<std::pair<std::size_t, double>> terms;
            for (const auto& [m, var] : cv.src) {
                (void)m;
                terms.emplace_back(var, 1.0);
            }
            lp.add_constraint("src|" + c.kind + "|" + c.key, std::move(terms), Relation::Equal,
                              c.demand);
        }
        {
            std::vector<std::pair<std::size_t, double>> terms;
            for (const auto& [m, var] : cv.snk) {
                (void)m;
                terms.emplace_back(var, 1.0);
            }
            lp.add_constraint("dst|" + c.kind + "|" + c.key, std::move(terms), Relation::Equal,
                              c.demand);
        }
        for (std::size_t m = 0; m < net.nodes.size(); ++m) {
            std::vector<std::pair<std::size_t, double>> terms;
            for (std::size_t l = 0; l < L; ++l) {
                const bool is_a = net.links[l].a == net.nodes[m].id;
                const bool is_b = net.links[l].b == net.nodes[m].id;
                if (!is_a && !is_b) continue;
                const std::size_t fwd = 2 * l, rev = 2 * l + 1; // a->b, b->a
                if (is_a) {
                    terms.emplace_back(cv.phys[rev], 1.0);
                    terms.emplace_back(cv.phys[fwd], -1.0);
                } else {
                    terms.emplace_back(cv.phys[fwd], 1.0);
                    terms.emplace_back(cv.phys[rev], -1.0);
                }
            }
            for (const auto& [hm, var] : cv.src)
                if (hm == m) terms.emplace_back(var, 1.0);
            for (const auto& [hm, var] : cv.snk)
                if (hm == m) terms.emplace_back(var, -1.0);
            if (!terms.empty())
                lp.add_constraint("bal|" + c.kind + "|" + c.key + "|" + net.nodes[m].id,
                                  std::move(terms), Relation::Equal, 0.0);
        }
    }

    // overlap rows (Scenario mode only; aggregated modes reserve post hoc)
    if (explicit_overlap_vars) {
        std::map<std::string, std::vector<std::string>> crit_nbrs;
        for (const auto& t : x.l1) {
            auto& cs = crit_nbrs[t.neighbor];
            if (std::find(cs.begin(), cs.end(), t.critical) == cs.end())
                cs.push_back(t.critical);
        }
        for (auto& [v, cs] : crit_nbrs) {
            (void)v;
            std::sort(cs.begin(), cs.end());
        }
        std::map<std::string, std::size_t> l1_index;
        for (std::size_t ci = 0; ci < b.commodities.size(); ++ci)
            if (b.commodities[ci].kind == "L1") l1_index[b.commodities[ci].key] = ci;

        const std::size_t scen_size = std::min(x.k, x.base.critical_ids().size());
        for (const auto& v : b.overlap_neighbors) {
            const auto& pool = crit_nbrs.at(v);
            const auto subsets = maximal_subsets(pool, scen_size);
            for (const auto& bk : x.backup_ids) {
                for (std::size_t si = 0; si < subsets.size(); ++si) {
                    for (std::size_t a = 0; a < 2 * L; ++a) {
                        std::vector<std::pair<std::size_t, double>> terms;
                        for (const auto& c : subsets[si]) {
                            const auto it = l1_index.find(bk + "|" + c + "|" + v);
                            if (it != l1_index.end())
                                terms.emplace_back(b.cvars[it->second].phys[a], 1.0);
                        }
                        if (terms.empty()) continue;
                        terms.emplace_back(b.ovar.at(v)[a], -1.0);
                        lp.add_constraint("ov|" + v + "|" + bk + "|s" + std::to_string(si) + "|p" +
                                              std::to_string(a),
                                          std::move(terms), Relation::LessEqual, 0.0);
                    }
                }
            }
        }
    }

    // link capacity: every flow family in both directions; in Scenario mode
    // the stand-in flows enter through their reservation variables instead
    for (std::size_t l = 0; l < L; ++l) {
        std::vector<std::pair<std::size_t, double>> terms;
        for (std::size_t ci = 0; ci < b.commodities.size(); ++ci) {
            if (explicit_overlap_vars && b.commodities[ci].kind == "L1") continue;
            terms.emplace_back(b.cvars[ci].phys[2 * l], 1.0);
            terms.emplace_back(b.cvars[ci].phys[2 * l + 1], 1.0);
        }
        for (const auto& v : b.overlap_neighbors) {
            if (!explicit_overlap_vars) break;
            terms.emplace_back(b.ovar.at(v)[2 * l], 1.0);
            terms.emplace_back(b.ovar.at(v)[2 * l + 1], 1.0);
        }
        lp.add_constraint("cap|" + link_key(net.links[l].a, net.links[l].b), std::move(terms),
                          Relation::LessEqual, net.available_bw(l));
    }

    // mapping-arc coupling: flow may touch a host only when its endpoint maps there
    if (!fixed) {
        std::map<std::pair<std::string, std::size_t>,
                 std::vector<std::pair<std::size_t, double>>>
            rows;
        for (std::size_t ci = 0; ci < b.commodities.size(); ++ci) {
            const auto& c = b.commodities[ci];
            for (const auto& [m, var] : b.cvars[ci].src) rows[{c.source, m}].emplace_back(var, 1.0);
            for (const auto& [m, var] : b.cvars[ci].snk) rows[{c.sink, m}].emplace_back(var, 1.0);
        }
        for (auto& [key, terms] : rows) {
            const auto& [u, m] = key;
            terms.emplace_back(b.rho.at(u).at(m), -b.lambda_big);
            lp.add_constraint("map|" + u + "|" + net.nodes[m].id, std::move(terms),
                              Relation::LessEqual, 0.0);
        }
    }

    // objective
    if (!fixed) {
        for (const auto& u : b.virtuals) {
            const double g = b.vdemand.at(u);
            if (g == 0.0) continue;
            for (const auto& [m, var] : b.rho.at(u)) {
                const double alpha = 1.0 / (net.available_cpu(net.nodes[m].id) + problem.epsilon);
                lp.add_objective(var, alpha * g);
            }
        }
    }
    for (std::size_t l = 0; l < L; ++l) {
        const double beta = 1.0 / (net.available_bw(l) + problem.epsilon);
        for (std::size_t ci = 0; ci < b.commodities.size(); ++ci) {
            if (explicit_overlap_vars && b.commodities[ci].kind == "L1") continue;
            lp.add_objective(b.cvars[ci].phys[2 * l], beta);
            lp.add_objective(b.cvars[ci].phys[2 * l + 1], beta);
        }
        for (const auto& v : b.overlap_neighbors) {
            if (!explicit_overlap_vars) break;
            lp.add_objective(b.ovar.at(v)[2 * l], beta);
            lp.add_objective(b.ovar.at(v)[2 * l + 1], beta);
        }
    }

    return b;
}

} // namespace

LinearProgram build_program(const EmbeddingProblem& problem, const PhysicalNetwork& network) {
    if (problem.overlap_mode == OverlapMode::Scenario && problem.expanded.k > 0)
        scenario_set(problem.expanded, problem.scenario_cap); // enforces the cap
    return assemble(problem, network, nullptr).lp;
}

EmbedResult solve_embedding(const EmbeddingProblem& problem, const PhysicalNetwork& network,
                            const SolveOptions& opts) {
    if (problem.overlap_mode == OverlapMode::Scenario && problem.expanded.k > 0)
        scenario_set(problem.expanded, problem.scenario_cap);

    EmbedResult out;
    auto relaxed = assemble(problem, network, nullptr);
    const auto rsol = solve(relaxed.lp, true, opts);
    if (rsol.status != LpStatus::Optimal) {
        out.reject_reason = rsol.status == LpStatus::Infeasible ? "relaxation-infeasible"
                                                                : "relaxation-not-solved";
        return out;
    }

    // greedy rounding by descending fractional value; candidates that break
    // a placement rule fall through to the next value
    struct Cand {
        double value;
        std::size_t uidx;
        std::size_t host;
    };
    std::vector<Cand> cands;
    for (std::size_t ui = 0; ui < relaxed.virtuals.size(); ++ui)
        for (const auto& [m, var] : relaxed.rho.at(relaxed.virtuals[ui]))
            cands.push_back({rsol.values[var], ui, m});
    std::stable_sort(cands.begin(), cands.end(), [&](const Cand& a, const Cand& c) {
        if (a.value != c.value) return a.value > c.value;
        if (a.uidx != c.uidx) return a.uidx < c.uidx;
        return network.nodes[a.host].id < network.nodes[c.host].id;
    });
    std::map<std::string, std::string> assignment;
    std::set<std::size_t> used_hosts;
    std::set<std::string> used_racks;
    const std::set<std::string> base_set = [&] {
        std::set<std::string> s;
        for (const auto& n : problem.expanded.base.nodes) s.insert(n.id);
        return s;
    }();
    for (const auto& c : cands) {
        const auto& u = relaxed.virtuals[c.uidx];
        if (assignment.count(u) || used_hosts.count(c.host)) continue;
        const auto& rack = network.nodes[c.host].rack;
        if (problem.rack_separation && base_set.count(u) && !rack.empty() &&
            used_racks.count(rack))
            continue;
        assignment[u] = network.nodes[c.host].id;
        used_hosts.insert(c.host);
        if (problem.rack_separation && base_set.count(u) && !rack.empty()) used_racks.insert(rack);
    }
    if (assignment.size() != relaxed.virtuals.size()) {
        out.reject_reason = "rounding-failed";
        return out;
    }

    // second pass: maps fixed, flows re-optimized
    auto fixed = assemble(problem, network, &assignment);
    const auto fsol = solve(fixed.lp, true, opts);
    if (fsol.status != LpStatus::Optimal) {
        out.reject_reason = "flow-infeasible";
        return out;
    }

    EmbeddingSolution sol;
    sol.node_map = assignment;
    const std::size_t L = network.links.size();
    for (std::size_t ci = 0; ci < fixed.commodities.size(); ++ci) {
        const auto& c = fixed.commodities[ci];
        CommodityFlow cf;
        cf.kind = c.kind;
        cf.key = c.key;
        cf.source = c.source;
        cf.sink = c.sink;
        cf.demand = c.demand;
        cf.arc.resize(2 * L);
        for (std::size_t a = 0; a < 2 * L; ++a)
            cf.arc[a] = std::max(0.0, fsol.values[fixed.cvars[ci].phys[a]]);
        sol.flows.push_back(std::move(cf));
    }
    if (problem.overlap_mode == OverlapMode::Scenario) {
        for (const auto& v : fixed.overlap_neighbors) {
            OverlapFlow of;
            of.neighbor = v;
            of.arc.resize(2 * L);
            for (std::size_t a = 0; a < 2 * L; ++a)
                of.arc[a] = std::max(0.0, fsol.values[fixed.ovar.at(v)[a]]);
            sol.overlaps.push_back(std::move(of));
        }
    } else {
        // reservation recovered from the solved flows: the scenario worst
        // case per backup (Posthoc) or the plain verbatim sum (Verbatim)
        const auto wstar = overlap_scenario_weights(problem.expanded);
        for (const auto& v : fixed.overlap_neighbors) {
            OverlapFlow of;
            of.neighbor = v;
            of.arc.assign(2 * L, 0.0);
            for (const auto& cf : sol.flows) {
                if (cf.kind != "L1" || cf.sink != v) continue;
                for (std::size_t a = 0; a < 2 * L; ++a) {
                    if (problem.overlap_mode == OverlapMode::Verbatim)
                        of.arc[a] += cf.arc[a];
                    else
                        of.arc[a] = std::max(of.arc[a], wstar.at(v) * cf.arc[a]);
                }
            }
            sol.overlaps.push_back(std::move(of));
        }
    }

    for (const auto& u : fixed.virtuals) {
        const double g = fixed.vdemand.at(u);
        if (g <= 0.0) continue;
        auto& bucket = sol.is_backup_node(u) ? sol.reservation.node_cpu_redundant
                                             : sol.reservation.node_cpu_primary;
        bucket[assignment.at(u)] += g;
    }
    for (std::size_t l = 0; l < L; ++l) {
        const auto key = link_key(network.links[l].a, network.links[l].b);
        double primary = 0.0, redundant = 0.0;
        for (const auto& cf : sol.flows) {
            if (cf.kind == "L1") continue;
            (cf.kind == "E" ? primary : redundant) += cf.arc[2 * l] + cf.arc[2 * l + 1];
        }
        for (const auto& of : sol.overlaps) redundant += of.arc[2 * l] + of.arc[2 * l + 1];
        if (primary > 0.0) sol.reservation.link_bw_primary[key] = primary;
        if (redundant > 0.0) sol.reservation.link_bw_redundant[key] = redundant;
    }

    double objective = 0.0;
    for (const auto& u : fixed.virtuals) {
        const double g = fixed.vdemand.at(u);
        if (g == 0.0) continue;
        objective += g / (network.available_cpu(assignment.at(u)) + problem.epsilon);
    }
    for (std::size_t l = 0; l < L; ++l) {
        const double beta = 1.0 / (network.available_bw(l) + problem.epsilon);
        double flow = 0.0;
        for (const auto& cf : sol.flows)
            if (cf.kind != "L1") flow += cf.arc[2 * l] + cf.arc[2 * l + 1];
        for (const auto& of : sol.overlaps) flow += of.arc[2 * l] + of.arc[2 * l + 1];
        objective += beta * flow;
    }
    sol.objective = objective;
    out.solution = std::move(sol);
    return out;
}

ValidationReport validate(const EmbeddingSolution& solution, const EmbeddingProblem& problem,
                          const PhysicalNetwork& network) {
    ValidationReport rep;
    auto worst = [&rep](const std::string& family, double violation, const std::string& msg) {
        auto& w = rep.max_violation[family];
        if (violation > w) {
            w = violation;
            if (violation > 1e-6) rep.messages.push_back(msg);
        }
    };
    const auto& x = problem.expanded;
    const std::size_t L = network.links.size();

    rep.max_violation["mapping"] = 0.0;
    std::map<std::string, int> host_use;
    std::vector<std::string> expect = [&] {
        std::vector<std::string> v;
        for (const auto& n : x.base.nodes) v.push_back(n.id);
        for (const auto& bk : x.backup_ids) v.push_back(bk);
        return v;
    }();
    for (const auto& u : expect) {
        const auto it = solution.node_map.find(u);
        if (it == solution.node_map.end() || !network.find_node(it->second)) {
            worst("mapping", 1.0, "node " + u + " unmapped");
            continue;
        }
        ++host_use[it->second];
        const bool is_base = std::any_of(x.base.nodes.begin(), x.base.nodes.end(),
                                         [&](const VInfNode& n) { return n.id == u; });
        if (is_base && problem.excluded_hosts.count(it->second))
            worst("mapping", 1.0, "node " + u + " on an excluded host");
        if (const auto pref = problem.preferred.find(u); pref != problem.preferred.end())
            if (!pref->second.count(it->second))
                worst("mapping", 1.0, "node " + u + " outside its preferred set");
        if (const auto pin = problem.pinned.find(u); pin != problem.pinned.end())
            if (pin->second != it->second) worst("mapping", 1.0, "node " + u + " ignores its pin");
    }
    for (const auto& [host, uses] : host_use)
        if (uses > 1)
            worst("mapping", uses - 1.0, "host " + host + " hosts " + std::to_string(uses));
    if (problem.rack_separation) {
        std::map<std::string, int> rack_use;
        for (const auto& n : x.base.nodes) {
            const auto it = solution.node_map.find(n.id);
            if (it == solution.node_map.end()) continue;
            const auto* pn = network.find_node(it->second);
            if (pn && !pn->rack.empty()) ++rack_use[pn->rack];
        }
        for (const auto& [rack, uses] : rack_use)
            if (uses > 1) worst("mapping", uses - 1.0, "rack " + rack + " reused");
    }

    rep.max_violation["compute"] = 0.0;
    {
        const auto d = demand_map(problem);
        std::map<std::string, double> used;
        for (const auto& [u, host] : solution.node_map) used[host] += d.count(u) ? d.at(u) : 0.0;
        for (const auto& [host, amt] : used)
            worst("compute", amt - network.available_cpu(host), "compute over on " + host);
    }

    rep.max_violation["conservation"] = 0.0;
    for (const auto& cf : solution.flows) {
        const auto src_host =
            solution.node_map.count(cf.source) ? solution.node_map.at(cf.source) : std::string{};
        const auto snk_host =
            solution.node_map.count(cf.sink) ? solution.node_map.at(cf.sink) : std::string{};
        for (const auto& pn : network.nodes) {
            double balance = 0.0;
            for (std::size_t l = 0; l < L; ++l) {
                if (network.links[l].a == pn.id) balance += cf.arc[2 * l + 1] - cf.arc[2 * l];
                if (network.links[l].b == pn.id) balance += cf.arc[2 * l] - cf.arc[2 * l + 1];
            }
            if (pn.id == src_host) balance += cf.demand;
            if (pn.id == snk_host) balance -= cf.demand;
            worst("conservation", std::abs(balance),
                  "imbalance for " + cf.kind + " " + cf.key + " at " + pn.id);
        }
    }

    rep.max_violation["overlap"] = 0.0;
    rep.max_violation["overlap-economy"] = 0.0;
    if (!x.l1.empty() && problem.overlap_mode != OverlapMode::Scenario) {
        const auto wstar = overlap_scenario_weights(x);
        for (const auto& of : solution.overlaps) {
            for (std::size_t a = 0; a < 2 * L; ++a) {
                double verbatim = 0.0, worst_case = 0.0;
                for (const auto& cf : solution.flows) {
                    if (cf.kind != "L1" || cf.sink != of.neighbor) continue;
                    verbatim += cf.arc[a];
                    worst_case = std::max(worst_case, wstar.at(of.neighbor) * cf.arc[a]);
                }
                const double need =
                    problem.overlap_mode == OverlapMode::Verbatim ? verbatim : worst_case;
                worst("overlap", need - of.arc[a], "overlap short for " + of.neighbor);
                worst("overlap-economy", of.arc[a] - verbatim,
                      "overlap above verbatim for " + of.neighbor);
            }
        }
    } else if (!x.l1.empty()) {
        std::map<std::string, const CommodityFlow*> l1_by_key;
        for (const auto& cf : solution.flows)
            if (cf.kind == "L1") l1_by_key[cf.key] = &cf;
        const auto scenarios = scenario_set(x, problem.scenario_cap);
        for (const auto& of : solution.overlaps) {
            const auto& v = of.neighbor;
            for (const auto& scen : scenarios) {
                for (const auto& bk : x.backup_ids) {
                    for (std::size_t a = 0; a < 2 * L; ++a) {
                        double lhs = 0.0;
                        for (const auto& c : scen) {
                            const auto it = l1_by_key.find(bk + "|" + c + "|" + v);
                            if (it != l1_by_key.end()) lhs += it->second->arc[a];
                        }
                        worst("overlap", lhs - of.arc[a], "overlap short for " + v);
                    }
                }
            }
            for (std::size_t a = 0; a < 2 * L; ++a) {
                double verbatim = 0.0;
                for (const auto& [key, cf] : l1_by_key) {
                    (void)key;
                    if (cf->sink == v) verbatim += cf->arc[a];
                }
                worst("overlap-economy", of.arc[a] - verbatim, "overlap above verbatim for " + v);
            }
        }
    }

    rep.max_violation["capacity"] = 0.0;
    for (std::size_t l = 0; l < L; ++l) {
        double used = 0.0;
        for (const auto& cf : solution.flows)
            if (cf.kind != "L1") used += cf.arc[2 * l] + cf.arc[2 * l + 1];
        for (const auto& of : solution.overlaps) used += of.arc[2 * l] + of.arc[2 * l + 1];
        worst("capacity", used - network.available_bw(l),
              "capacity over on " + link_key(network.links[l].a, network.links[l].b));
    }
    return rep;
}

} // namespace vinfra
