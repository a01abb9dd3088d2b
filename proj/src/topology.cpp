#include "vinfra/topology.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace vinfra {

void VInfRequest::validate() const {
    std::set<std::string> seen;
    bool any_critical = false;
    for (const auto& n : nodes) {
        if (n.id.empty() || n.id.front() == '_')
            throw SchemaError("vinf: node ids must be non-empty and not start with '_'");
        if (!seen.insert(n.id).second) throw SchemaError("vinf: duplicate node id " + n.id);
        if (n.cpu < 0.0) throw SchemaError("vinf: negative compute demand on " + n.id);
        any_critical = any_critical || n.critical;
    }
    std::set<std::pair<std::string, std::string>> edge_seen;
    for (const auto& e : edges) {
        if (e.a == e.b) throw SchemaError("vinf: self loop on " + e.a);
        if (!seen.count(e.a) || !seen.count(e.b))
            throw SchemaError("vinf: edge references unknown node");
        if (!(e.bw > 0.0)) throw SchemaError("vinf: edge bandwidth must be positive");
        auto key = std::minmax(e.a, e.b);
        if (!edge_seen.insert({key.first, key.second}).second)
            throw SchemaError("vinf: multi-edge between " + e.a + " and " + e.b);
    }
    if (any_critical != (reliability > 0.0))
        throw SchemaError("vinf: critical nodes and a reliability target must come together");
    if (reliability > 0.0 && !(reliability < 1.0))
        throw SchemaError("vinf: reliability target must lie in (0,1)");
    if (reliability > 0.0 && !cascade_model && !(failure_p > 0.0 && failure_p < 1.0))
        throw SchemaError("vinf: failure probability must lie in (0,1)");
}

std::vector<std::string> VInfRequest::critical_ids() const {
    std::vector<std::string> ids;
    for (const auto& n : nodes)
        if (n.critical) ids.push_back(n.id);
    std::sort(ids.begin(), ids.end());
    return ids;
}

const VInfNode* VInfRequest::find(const std::string& id) const {
    for (const auto& n : nodes)
        if (n.id == id) return &n;
    return nullptr;
}

FailureDistribution VInfRequest::failure_distribution() const {
    const std::size_t nc = critical_ids().size();
    if (!cascade_model) return independent_distribution(nc, failure_p);
    if (const auto* load = std::get_if<LoadModelParams>(&*cascade_model)) {
        auto params = *load;
        params.n = nc;
        return load_based_distribution(params);
    }
    if (const auto* deg = std::get_if<DegreeModelParams>(&*cascade_model)) {
        auto params = *deg;
        params.n = nc;
        return degree_worst_case_distribution(params);
    }
    const auto& tree = std::get<TreeModelParams>(*cascade_model);
    if (tree.n != nc)
        throw ModelError("vinf: tree model category count must match the critical set");
    return tree_based_distribution(tree);
}

ExpandedVInf expand(const VInfRequest& vinf, std::size_t k) {
    vinf.validate();
    ExpandedVInf out;
    out.base = vinf;
    out.k = k;
    if (k == 0) return out;
    const auto criticals = vinf.critical_ids();
    if (criticals.empty()) throw SchemaError("expand: k > 0 requires critical nodes");

    for (const auto& c : criticals)
        out.backup_cpu = std::max(out.backup_cpu, vinf.find(c)->cpu);
    for (std::size_t a = 0; a < k; ++a) out.backup_ids.push_back("_bk" + std::to_string(a));

    // neighbor map with edge demands, ordered for deterministic output
    std::map<std::string, std::map<std::string, double>> nbr;
    for (const auto& e : vinf.edges) {
        nbr[e.a][e.b] = e.bw;
        nbr[e.b][e.a] = e.bw;
    }
    const std::set<std::string> critical_set(criticals.begin(), criticals.end());
    for (std::size_t a = 0; a < k; ++a)
        for (const auto& c : criticals)
            for (const auto& [v, bw] : nbr[c]) out.l1.push_back({a, c, v, bw});

    for (const auto& e : vinf.edges)
        if (critical_set.count(e.a) && critical_set.count(e.b))
            out.l2_demand = std::max(out.l2_demand, e.bw);
    if (out.l2_demand > 0.0)
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = a + 1; b < k; ++b) out.l2.emplace_back(a, b);
    return out;
}

std::vector<std::vector<std::string>> scenario_set(const ExpandedVInf& expanded,
                                                   std::size_t cap) {
    const auto criticals = expanded.base.critical_ids();
    const std::size_t m = std::min(expanded.k, criticals.size());
    // subset count with overflow-safe accumulation against the cap
    double count = 0.0;
    {
        double binom = 1.0;
        for (std::size_t j = 1; j <= m; ++j) {
            binom *= static_cast<double>(criticals.size() - j + 1) / static_cast<double>(j);
            count += binom;
            if (count > static_cast<double>(cap))
                throw SizeError("scenario_set: subset count exceeds the cap");
        }
    }
    std::vector<std::vector<std::string>> out;
    out.reserve(static_cast<std::size_t>(count));
    std::vector<std::size_t> pick;
    for (std::size_t size = 1; size <= m; ++size) {
        pick.resize(size);
        for (std::size_t i = 0; i < size; ++i) pick[i] = i;
        bool more = true;
        while (more) {
            std::vector<std::string> subset;
            subset.reserve(size);
            for (auto i : pick) subset.push_back(criticals[i]);
            out.push_back(std::move(subset));
            more = false;
            for (std::size_t i = size; i-- > 0;) {
                if (pick[i] + (size - i) < criticals.size()) {
                    ++pick[i];
                    for (std::size_t j = i + 1; j < size; ++j) pick[j] = pick[j - 1] + 1;
                    more = true;
                    break;
                }
            }
        }
    }
    return out;
}

} // namespace vinfra
