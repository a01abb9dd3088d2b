#include "vinfra/sim.hpp"

#include "vinfra/reliability.hpp"
#include "vinfra/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace vinfra {

void ScenarioConfig::validate() const {
    auto prob = [](double p) { return p > 0.0 && p < 1.0; };
    if (physical_nodes == 0) throw SchemaError("config: need physical nodes");
    if (!(cpu_max >= cpu_min) || !(bw_max >= bw_min) || !(demand_max >= demand_min) ||
        !(vbw_max >= vbw_min) || vinf_max < vinf_min || vinf_min == 0)
        throw SchemaError("config: empty range");
    if (!prob(arrival_rate) || !prob(departure_rate) || !prob(failure_p) || !prob(reliability))
        throw SchemaError("config: probabilities must lie in (0,1)");
    if (physical_edge_prob < 0.0 || physical_edge_prob > 1.0 || virtual_edge_prob < 0.0 ||
        virtual_edge_prob > 1.0)
        throw SchemaError("config: edge probabilities must lie in [0,1]");
    if (critical_fraction_cap < 0.0 || critical_fraction_cap > 1.0)
        throw SchemaError("config: critical fraction cap must lie in [0,1]");
    if (policy != "share" && policy != "noshare" && policy != "nonr")
        throw SchemaError("config: unknown policy " + policy);
    if (horizon == 0) throw SchemaError("config: empty horizon");
}

ScenarioConfig full_scale_config() {
    ScenarioConfig c;
    c.physical_nodes = 40;
    c.horizon = 800;
    c.vinf_min = 2;
    c.vinf_max = 10;
    return c;
}

const std::vector<std::string>& MetricsSeries::metric_names() {
    static const std::vector<std::string> names = {
        "acceptance_rate", "admitted",     "cpu_primary",  "cpu_redundant",
        "bw_primary",      "bw_redundant", "backup_nodes"};
    return names;
}

const std::vector<double>& MetricsSeries::series(const std::string& metric) const {
    if (metric == "acceptance_rate") return acceptance_rate;
    if (metric == "admitted") return admitted;
    if (metric == "cpu_primary") return cpu_primary;
    if (metric == "cpu_redundant") return cpu_redundant;
    if (metric == "bw_primary") return bw_primary;
    if (metric == "bw_redundant") return bw_redundant;
    if (metric == "backup_nodes") return backup_nodes;
    throw NotFoundError("metrics: unknown series " + metric);
}

PhysicalNetwork generate_physical(const ScenarioConfig& config, std::uint64_t seed) {
    config.validate();
    Rng rng = Rng::substream(seed, "physical");
    PhysicalNetwork net;
    for (std::size_t i = 0; i < config.physical_nodes; ++i)
        net.nodes.push_back({"p" + std::to_string(i),
                             config.cpu_min + (config.cpu_max - config.cpu_min) * rng.next_double(),
                             ""});
    for (std::size_t i = 0; i < config.physical_nodes; ++i)
        for (std::size_t j = i + 1; j < config.physical_nodes; ++j)
            if (rng.next_bool(config.physical_edge_prob))
                net.links.push_back(
                    {net.nodes[i].id, net.nodes[j].id,
                     config.bw_min + (config.bw_max - config.bw_min) * rng.next_double()});
    return net;
}

VInfRequest generate_request(const ScenarioConfig& config, std::uint64_t seed, std::size_t slot) {
    config.validate();
    Rng rng = Rng::substream(seed, "request", slot);
    VInfRequest v;
    const std::size_t size = static_cast<std::size_t>(
        rng.next_int(static_cast<std::int64_t>(config.vinf_min),
                     static_cast<std::int64_t>(config.vinf_max)));
    for (std::size_t i = 0; i < size; ++i)
        v.nodes.push_back(
            {"v" + std::to_string(i),
             config.demand_min + (config.demand_max - config.demand_min) * rng.next_double(),
             false});
    const std::size_t crit_max =
        static_cast<std::size_t>(config.critical_fraction_cap * static_cast<double>(size));
    const std::size_t ncrit =
        static_cast<std::size_t>(rng.next_int(0, static_cast<std::int64_t>(crit_max)));
    for (std::size_t i = 0; i < ncrit; ++i) v.nodes[i].critical = true;
    for (std::size_t i = 0; i < size; ++i)
        for (std::size_t j = i + 1; j < size; ++j)
            if (rng.next_bool(config.virtual_edge_prob))
                v.edges.push_back(
                    {v.nodes[i].id, v.nodes[j].id,
                     config.vbw_min + (config.vbw_max - config.vbw_min) * rng.next_double()});
    if (ncrit > 0) {
        v.reliability = config.reliability;
        v.failure_p = config.failure_p;
    }
    return v;
}

namespace {

struct SimPool {
    int id = 0;
    BackupPool pool;                      // reliability bookkeeping
    std::vector<std::string> slot_hosts;  // physical hosts of the anchor's backups
    double backup_cpu = 0.0;              // per-slot compute the anchor reserved
    double l2_demand = 0.0;               // per-pair interconnect demand the anchor reserved
    std::set<std::string> used_hosts;     // hosts of every participant, for exclusions
    std::map<std::string, std::set<std::string>> member_hosts; // lease -> its base hosts
    bool anchor_alive = true;
    std::string anchor_lease;

    SimPool(int pid, PoolMember anchor) : id(pid), pool(std::move(anchor)) {}
    bool open() const { return anchor_alive; }
    bool empty_shell() const { return !anchor_alive && pool.members().empty(); }
};

struct Lease {
    std::string id;
    std::size_t depart = 0;
    std::size_t size = 0;
    bool has_critical = false;
    std::size_t owned_backups = 0;
    int pool_id = -1;
    bool is_anchor = false;
};

// cheap exact infeasibility screens, both are necessary conditions
bool obviously_infeasible(const ExpandedVInf& x, double backup_cpu_eff,
                          const PhysicalNetwork& net) {
    double need = 0.0, max_single = 0.0;
    for (const auto& n : x.base.nodes) {
        need += n.cpu;
        max_single = std::max(max_single, n.cpu);
    }
    need += backup_cpu_eff * static_cast<double>(x.backup_ids.size());
    max_single = std::max(max_single, backup_cpu_eff);
    double free_total = 0.0, free_max = 0.0;
    for (const auto& n : net.nodes) {
        const double a = net.available_cpu(n.id);
        free_total += a;
        free_max = std::max(free_max, a);
    }
    if (need > free_total + 1e-9) return true;
    if (max_single > free_max + 1e-9) return true;
    // every virtual node needs its own host
    std::size_t virtuals = x.base.nodes.size() + x.backup_ids.size();
    return virtuals > net.nodes.size();
}

} // namespace

MetricsSeries run(const ScenarioConfig& config) {
    config.validate();
    PhysicalNetwork net = generate_physical(config, config.seed);

    MetricsSeries metrics;
    metrics.total_cpu = net.total_cpu();
    metrics.total_bw = net.total_bw();

    std::vector<SimPool> pools;
    std::map<std::string, Lease> leases;
    int next_pool_id = 0;

    Rng arrivals_rng = Rng::substream(config.seed, "arrivals");
    std::size_t next_arrival = static_cast<std::size_t>(arrivals_rng.next_geometric(
                                   config.arrival_rate)) - 1; // first slot offset

    auto pool_by_id = [&](int id) -> SimPool* {
        for (auto& p : pools)
            if (p.id == id) return &p;
        return nullptr;
    };

    auto drop_pool_if_done = [&](int id) {
        for (std::size_t i = 0; i < pools.size(); ++i) {
            if (pools[i].id == id && pools[i].empty_shell()) {
                if (net.has_reservation("shell|" + std::to_string(id)))
                    net.release("shell|" + std::to_string(id));
                pools.erase(pools.begin() + static_cast<std::ptrdiff_t>(i));
                return;
            }
        }
    };

    auto handle_departure = [&](const Lease& lease) {
        if (lease.pool_id >= 0) {
            SimPool* sp = pool_by_id(lease.pool_id);
            if (sp) {
                if (lease.is_anchor) {
                    sp->anchor_alive = false;
                    // keep the lent backups and interconnect paths alive for
                    // the members: re-book the redundant share under a shell id
                    const auto& res = net.reservations().at(lease.id);
                    if (!sp->pool.members().empty()) {
                        Reservation shell;
                        shell.node_cpu_redundant = res.node_cpu_redundant;
                        shell.link_bw_redundant = res.link_bw_redundant;
                        net.release(lease.id);
                        net.apply("shell|" + std::to_string(sp->id), shell);
                    } else {
                        net.release(lease.id);
                    }
                    sp->used_hosts = {};
                    for (const auto& [m, hosts] : sp->member_hosts)
                        for (const auto& h : hosts) sp->used_hosts.insert(h);
                    for (const auto& h : sp->slot_hosts) sp->used_hosts.insert(h);
                } else {
                    sp->pool.remove(lease.id);
                    for (const auto& h : sp->member_hosts[lease.id]) sp->used_hosts.erase(h);
                    sp->member_hosts.erase(lease.id);
                    net.release(lease.id);
                }
                drop_pool_if_done(lease.pool_id);
            } else {
                net.release(lease.id);
            }
        } else {
            net.release(lease.id);
        }
    };

    std::size_t slot = 0;
    for (;; ++slot) {
        const bool in_horizon = slot < config.horizon;
        if (!in_horizon && (!config.drain || leases.empty())) break;

        // departures first: freed capacity is visible to this slot's arrival
        {
            std::vector<std::string> due;
            for (const auto& [id, l] : leases)
                if (l.depart <= slot) due.push_back(id);
            for (const auto& id : due) {
                handle_departure(leases.at(id));
                leases.erase(id);
            }
        }

        if (in_horizon && slot == next_arrival) {
            next_arrival = slot + static_cast<std::size_t>(
                                      arrivals_rng.next_geometric(config.arrival_rate));
            ++metrics.arrived;
            const VInfRequest request = generate_request(config, config.seed, slot);
            const std::size_t nc = request.critical_ids().size();
            const std::string lease_id = "lease|" + std::to_string(slot);
            Rng lease_rng = Rng::substream(config.seed, "lease", slot);
            const std::size_t lease_len =
                static_cast<std::size_t>(lease_rng.next_geometric(config.departure_rate));

            std::size_t k = 0;
            FailureDistribution f;
            if (config.policy != "nonr" && nc > 0) {
                f = request.failure_distribution();
                k = min_backups(nc, config.failure_p, config.reliability, f);
            }
            VInfRequest effective = request;
            if (config.policy == "nonr") {
                // strip the guarantee: no expansion at all
                for (auto& n : effective.nodes) n.critical = false;
                effective.reliability = 0.0;
            }
            const ExpandedVInf expanded = expand(effective, k);

            bool accepted = false;
            Lease lease{lease_id, slot + lease_len, request.nodes.size(), nc > 0, 0, -1, false};

            // pooled attempt: pick the open pool with the most free slots that
            // passes the reliability criterion, then embed against its hosts
            const OverlapMode mode = config.policy == "noshare" ? OverlapMode::Verbatim
                                                                 : OverlapMode::Posthoc;
            if (config.policy == "share" && k > 0) {
                std::vector<SimPool*> order;
                for (auto& p : pools)
                    if (p.open() && p.pool.free_slots() >= k) order.push_back(&p);
                std::sort(order.begin(), order.end(), [](const SimPool* a, const SimPool* b) {
                    if (a->pool.free_slots() != b->pool.free_slots())
                        return a->pool.free_slots() > b->pool.free_slots();
                    return a->id < b->id;
                });
                for (SimPool* sp : order) {
                    PoolMember cand{lease_id, nc, k, config.failure_p, config.reliability, f};
                    const auto decision = sp->pool.admit(cand);
                    if (!decision.admitted) continue;
                    EmbeddingProblem prob;
                    prob.expanded = expanded;
                    prob.overlap_mode = mode;
                    prob.excluded_hosts = sp->used_hosts;
                    for (std::size_t i = 0; i < k; ++i)
                        prob.pinned["_bk" + std::to_string(i)] =
                            sp->slot_hosts[decision.slots[i]];
                    prob.backup_compute_override =
                        std::max(0.0, expanded.backup_cpu - sp->backup_cpu);
                    prob.l2_demand_override =
                        std::max(0.0, expanded.l2_demand - sp->l2_demand);
                    auto res = solve_embedding(prob, net);
                    if (res.solution && validate(*res.solution, prob, net).ok()) {
                        net.apply(lease_id, res.solution->reservation);
                        lease.pool_id = sp->id;
                        std::set<std::string> base_hosts;
                        for (const auto& n : expanded.base.nodes)
                            base_hosts.insert(res.solution->node_map.at(n.id));
                        sp->member_hosts[lease_id] = base_hosts;
                        for (const auto& h : base_hosts) sp->used_hosts.insert(h);
                        accepted = true;
                    } else {
                        sp->pool.remove(lease_id); // revert the trial admission
                    }
                    break; // one pool attempt, then fall through to standalone
                }
            }

            if (!accepted) {
                EmbeddingProblem prob;
                prob.expanded = expanded;
                prob.overlap_mode = mode;
                if (!obviously_infeasible(expanded, expanded.backup_cpu, net)) {
                    auto res = solve_embedding(prob, net);
                    if (res.solution && validate(*res.solution, prob, net).ok()) {
                        net.apply(lease_id, res.solution->reservation);
                        lease.owned_backups = k;
                        accepted = true;
                        if (config.policy == "share" && k > 0) {
                            PoolMember anchor{lease_id, nc, k, config.failure_p,
                                              config.reliability, f};
                            SimPool sp(next_pool_id++, std::move(anchor));
                            sp.anchor_lease = lease_id;
                            sp.backup_cpu = expanded.backup_cpu;
                            sp.l2_demand = expanded.l2_demand;
                            for (const auto& b : expanded.backup_ids)
                                sp.slot_hosts.push_back(res.solution->node_map.at(b));
                            for (const auto& [u, host] : res.solution->node_map)
                                sp.used_hosts.insert(host);
                            lease.pool_id = sp.id;
                            lease.is_anchor = true;
                            pools.push_back(std::move(sp));
                        }
                    }
                }
            }

            auto& cell = metrics.rejection_profile[{lease.size, lease.has_critical}];
            ++cell.first;
            if (accepted) {
                ++metrics.accepted;
                leases.emplace(lease_id, lease);
            } else {
                ++cell.second;
            }
        }

        if (in_horizon) {
            metrics.acceptance_rate.push_back(
                metrics.arrived == 0 ? 0.0
                                     : static_cast<double>(metrics.accepted) /
                                           static_cast<double>(metrics.arrived));
            metrics.admitted.push_back(static_cast<double>(leases.size()));
            metrics.cpu_primary.push_back(net.reserved_cpu_primary() / metrics.total_cpu);
            metrics.cpu_redundant.push_back(net.reserved_cpu_redundant() / metrics.total_cpu);
            metrics.bw_primary.push_back(
                metrics.total_bw > 0 ? net.reserved_bw_primary() / metrics.total_bw : 0.0);
            metrics.bw_redundant.push_back(
                metrics.total_bw > 0 ? net.reserved_bw_redundant() / metrics.total_bw : 0.0);
            double backups = 0.0;
            for (const auto& p : pools) backups += static_cast<double>(p.pool.anchor().k);
            if (config.policy != "share")
                for (const auto& [id, l] : leases) {
                    (void)id;
                    backups += static_cast<double>(l.owned_backups);
                }
            metrics.backup_nodes.push_back(backups);
        }
        if (slot > config.horizon + 2000000) throw std::logic_error("sim: drain ran away");
        for (const auto& p : pools) p.pool.check_invariants();
    }
    metrics.final_reserved_cpu = net.reserved_cpu_primary() + net.reserved_cpu_redundant();
    metrics.final_reserved_bw = net.reserved_bw_primary() + net.reserved_bw_redundant();
    return metrics;
}

std::map<std::string, double> aggregate_metrics(const MetricsSeries& m) {
    auto mean_of = [](const std::vector<double>& v) {
        if (v.empty()) return 0.0;
        return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    std::map<std::string, double> out;
    out["acceptance_rate"] =
        m.arrived == 0 ? 0.0 : static_cast<double>(m.accepted) / static_cast<double>(m.arrived);
    out["mean_admitted"] = mean_of(m.admitted);
    out["mean_cpu_primary"] = mean_of(m.cpu_primary);
    out["mean_cpu_redundant"] = mean_of(m.cpu_redundant);
    out["mean_bw_primary"] = mean_of(m.bw_primary);
    out["mean_bw_redundant"] = mean_of(m.bw_redundant);
    out["mean_backup_nodes"] = mean_of(m.backup_nodes);
    // redundant compute per admitted VInf over the saturated second half
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t t = m.admitted.size() / 2; t < m.admitted.size(); ++t) {
        acc += m.cpu_redundant[t] * m.total_cpu / std::max(1.0, m.admitted[t]);
        ++count;
    }
    out["redundant_cpu_per_vinf"] = count == 0 ? 0.0 : acc / static_cast<double>(count);
    return out;
}

std::vector<CellStats> compare_policies(const ScenarioConfig& base,
                                        const std::vector<std::string>& policies,
                                        const std::string& sweep_param,
                                        const std::vector<double>& sweep_values,
                                        const std::vector<std::uint64_t>& seeds) {
    if (policies.empty() || seeds.empty()) throw SchemaError("compare: empty grid");
    std::vector<double> values = sweep_values;
    if (values.empty()) values.push_back(0.0);
    std::vector<CellStats> cells;
    for (const auto& policy : policies) {
        for (double value : values) {
            ScenarioConfig cfg = base;
            cfg.policy = policy;
            if (sweep_param == "vbw_max")
                cfg.vbw_max = value;
            else if (sweep_param == "reliability")
                cfg.reliability = value;
            else if (!sweep_param.empty())
                throw SchemaError("compare: unknown sweep parameter " + sweep_param);
            std::map<std::string, std::vector<double>> samples;
            for (const auto seed : seeds) {
                cfg.seed = seed;
                const auto agg = aggregate_metrics(run(cfg));
                for (const auto& [k, v] : agg) samples[k].push_back(v);
            }
            CellStats cell;
            cell.policy = policy;
            cell.sweep_value = value;
            for (const auto& [k, v] : samples) {
                const double mean =
                    std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
                double var = 0.0;
                for (double s : v) var += (s - mean) * (s - mean);
                var = v.size() > 1 ? var / static_cast<double>(v.size() - 1) : 0.0;
                cell.mean[k] = mean;
                cell.stddev[k] = std::sqrt(var);
            }
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

namespace {

std::string format_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

} // namespace

std::string series_csv(const std::vector<double>& series) {
    std::ostringstream os;
    os << "slot,value\n";
    for (std::size_t t = 0; t < series.size(); ++t) os << t << ',' << format_g(series[t]) << '\n';
    return os.str();
}

std::string aggregate_csv(const std::vector<CellStats>& cells) {
    std::ostringstream os;
    os << "cell,policy,metric,mean,std\n";
    for (std::size_t i = 0; i < cells.size(); ++i) {
        for (const auto& [metric, mean] : cells[i].mean) {
            os << format_g(cells[i].sweep_value) << ',' << cells[i].policy << ',' << metric << ','
               << format_g(mean) << ',' << format_g(cells[i].stddev.at(metric)) << '\n';
        }
    }
    return os.str();
}

std::string rejection_profile_csv(const MetricsSeries& m) {
    std::ostringstream os;
    os << "size,critical,arrived,rejected\n";
    for (const auto& [key, counts] : m.rejection_profile)
        os << key.first << ',' << (key.second ? 1 : 0) << ',' << counts.first << ','
           << counts.second << '\n';
    return os.str();
}

} // namespace vinfra
