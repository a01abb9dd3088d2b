#include "vinfra/json_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace vinfra {

namespace {

double get_number(const json& j, const std::string& key) {
    if (!j.contains(key) || !j.at(key).is_number())
        throw SchemaError("json: missing or non-numeric field '" + key + "'");
    return j.at(key).get<double>();
}

double get_number_or(const json& j, const std::string& key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) throw SchemaError("json: non-numeric field '" + key + "'");
    return j.at(key).get<double>();
}

std::string get_string(const json& j, const std::string& key) {
    if (!j.contains(key) || !j.at(key).is_string())
        throw SchemaError("json: missing or non-string field '" + key + "'");
    return j.at(key).get<std::string>();
}

std::vector<double> get_vector(const json& j, const std::string& key) {
    if (!j.contains(key) || !j.at(key).is_array())
        throw SchemaError("json: missing or non-array field '" + key + "'");
    std::vector<double> out;
    for (const auto& v : j.at(key)) {
        if (!v.is_number()) throw SchemaError("json: non-numeric entry in '" + key + "'");
        out.push_back(v.get<double>());
    }
    return out;
}

std::vector<std::vector<double>> get_matrix(const json& j, const std::string& key) {
    if (!j.contains(key) || !j.at(key).is_array())
        throw SchemaError("json: missing or non-array field '" + key + "'");
    std::vector<std::vector<double>> out;
    for (const auto& row : j.at(key)) {
        std::vector<double> r;
        for (const auto& v : row) r.push_back(v.get<double>());
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace

json physical_to_json(const PhysicalNetwork& net) {
    json nodes = json::array();
    for (const auto& n : net.nodes) {
        json jn{{"id", n.id}, {"cpu", n.cpu}};
        if (!n.rack.empty()) jn["rack"] = n.rack;
        nodes.push_back(jn);
    }
    json links = json::array();
    for (const auto& l : net.links) links.push_back({{"a", l.a}, {"b", l.b}, {"bw", l.bw}});
    return json{{"nodes", nodes}, {"links", links}};
}

PhysicalNetwork physical_from_json(const json& j) {
    PhysicalNetwork net;
    if (!j.is_object() || !j.contains("nodes")) throw SchemaError("physical json: missing nodes");
    for (const auto& n : j.at("nodes")) {
        PhysicalNode pn;
        pn.id = get_string(n, "id");
        pn.cpu = get_number(n, "cpu");
        if (n.contains("rack")) pn.rack = get_string(n, "rack");
        net.nodes.push_back(std::move(pn));
    }
    if (j.contains("links"))
        for (const auto& l : j.at("links"))
            net.links.push_back({get_string(l, "a"), get_string(l, "b"), get_number(l, "bw")});
    net.validate();
    return net;
}

json vinf_to_json(const VInfRequest& v) {
    json nodes = json::array();
    for (const auto& n : v.nodes)
        nodes.push_back({{"id", n.id}, {"cpu", n.cpu}, {"critical", n.critical}});
    json edges = json::array();
    for (const auto& e : v.edges) edges.push_back({{"a", e.a}, {"b", e.b}, {"bw", e.bw}});
    json out{{"nodes", nodes}, {"edges", edges}};
    if (v.reliability > 0.0) {
        out["reliability"] = v.reliability;
        if (v.cascade_model)
            out["failure"] = cascade_to_json(*v.cascade_model);
        else
            out["failure"] = json{{"model", "independent"}, {"p", v.failure_p}};
    }
    return out;
}

VInfRequest vinf_from_json(const json& j) {
    VInfRequest v;
    if (!j.is_object() || !j.contains("nodes")) throw SchemaError("vinf json: missing nodes");
    for (const auto& n : j.at("nodes")) {
        VInfNode vn;
        vn.id = get_string(n, "id");
        vn.cpu = get_number(n, "cpu");
        vn.critical = n.value("critical", false);
        v.nodes.push_back(std::move(vn));
    }
    if (j.contains("edges"))
        for (const auto& e : j.at("edges"))
            v.edges.push_back({get_string(e, "a"), get_string(e, "b"), get_number(e, "bw")});
    v.reliability = get_number_or(j, "reliability", 0.0);
    if (j.contains("failure")) {
        const auto& f = j.at("failure");
        const auto model = get_string(f, "model");
        if (model == "independent") {
            v.failure_p = get_number(f, "p");
        } else {
            v.cascade_model = cascade_from_json(f);
            v.failure_p = get_number_or(f, "p", 0.01);
        }
    }
    v.validate();
    return v;
}

CascadeModel cascade_from_json(const json& j) {
    const auto model = get_string(j, "model");
    if (model == "load") {
        LoadModelParams p;
        p.n = static_cast<std::size_t>(get_number_or(j, "n", 0));
        p.l_min = get_number(j, "l_min");
        p.l_max = get_number(j, "l_max");
        p.l_fail = get_number(j, "l_fail");
        p.d_disturb = get_number(j, "disturbance");
        p.p_transfer = get_number(j, "transfer");
        return p;
    }
    if (model == "tree") {
        TreeModelParams p;
        p.n = static_cast<std::size_t>(get_number(j, "categories"));
        p.environments = static_cast<std::size_t>(get_number_or(j, "environments", 1));
        p.cascade_rates = get_matrix(j, "cascade_rates");
        p.fail_rates = get_matrix(j, "fail_rates");
        p.repair_rates = get_matrix(j, "repair_rates");
        p.env_transition_rates = get_vector(j, "env_transition_rates");
        return p;
    }
    if (model == "degree") {
        DegreeModelParams p;
        p.n = static_cast<std::size_t>(get_number_or(j, "n", 0));
        p.degree_dist = get_vector(j, "degree_dist");
        p.threshold_values = get_vector(j, "threshold_values");
        p.threshold_probs = get_vector(j, "threshold_probs");
        return p;
    }
    throw SchemaError("cascade json: unknown model " + model);
}

json cascade_to_json(const CascadeModel& m) {
    if (const auto* load = std::get_if<LoadModelParams>(&m))
        return json{{"model", "load"},       {"n", load->n},
                    {"l_min", load->l_min},  {"l_max", load->l_max},
                    {"l_fail", load->l_fail}, {"disturbance", load->d_disturb},
                    {"transfer", load->p_transfer}};
    if (const auto* deg = std::get_if<DegreeModelParams>(&m))
        return json{{"model", "degree"},
                    {"n", deg->n},
                    {"degree_dist", deg->degree_dist},
                    {"threshold_values", deg->threshold_values},
                    {"threshold_probs", deg->threshold_probs}};
    const auto& tree = std::get<TreeModelParams>(m);
    return json{{"model", "tree"},
                {"categories", tree.n},
                {"environments", tree.environments},
                {"cascade_rates", tree.cascade_rates},
                {"fail_rates", tree.fail_rates},
                {"repair_rates", tree.repair_rates},
                {"env_transition_rates", tree.env_transition_rates}};
}

json config_to_json(const ScenarioConfig& c) {
    return json{{"physical_nodes", c.physical_nodes},
                {"cpu_min", c.cpu_min},
                {"cpu_max", c.cpu_max},
                {"physical_edge_prob", c.physical_edge_prob},
                {"bw_min", c.bw_min},
                {"bw_max", c.bw_max},
                {"horizon", c.horizon},
                {"arrival_rate", c.arrival_rate},
                {"departure_rate", c.departure_rate},
                {"vinf_min", c.vinf_min},
                {"vinf_max", c.vinf_max},
                {"demand_min", c.demand_min},
                {"demand_max", c.demand_max},
                {"critical_fraction_cap", c.critical_fraction_cap},
                {"virtual_edge_prob", c.virtual_edge_prob},
                {"vbw_min", c.vbw_min},
                {"vbw_max", c.vbw_max},
                {"failure_p", c.failure_p},
                {"reliability", c.reliability},
                {"policy", c.policy},
                {"seed", c.seed}};
}

ScenarioConfig config_from_json(const json& j) {
    ScenarioConfig c;
    if (!j.is_object()) throw SchemaError("config json: expected an object");
    c.physical_nodes = static_cast<std::size_t>(get_number_or(j, "physical_nodes", 20));
    c.cpu_min = get_number_or(j, "cpu_min", c.cpu_min);
    c.cpu_max = get_number_or(j, "cpu_max", c.cpu_max);
    c.physical_edge_prob = get_number_or(j, "physical_edge_prob", c.physical_edge_prob);
    c.bw_min = get_number_or(j, "bw_min", c.bw_min);
    c.bw_max = get_number_or(j, "bw_max", c.bw_max);
    c.horizon = static_cast<std::size_t>(get_number_or(j, "horizon", 200));
    c.arrival_rate = get_number_or(j, "arrival_rate", c.arrival_rate);
    c.departure_rate = get_number_or(j, "departure_rate", c.departure_rate);
    c.vinf_min = static_cast<std::size_t>(get_number_or(j, "vinf_min", 2));
    c.vinf_max = static_cast<std::size_t>(get_number_or(j, "vinf_max", 6));
    c.demand_min = get_number_or(j, "demand_min", c.demand_min);
    c.demand_max = get_number_or(j, "demand_max", c.demand_max);
    c.critical_fraction_cap = get_number_or(j, "critical_fraction_cap", c.critical_fraction_cap);
    c.virtual_edge_prob = get_number_or(j, "virtual_edge_prob", c.virtual_edge_prob);
    c.vbw_min = get_number_or(j, "vbw_min", c.vbw_min);
    c.vbw_max = get_number_or(j, "vbw_max", c.vbw_max);
    c.failure_p = get_number_or(j, "failure_p", c.failure_p);
    c.reliability = get_number_or(j, "reliability", c.reliability);
    if (j.contains("policy")) c.policy = get_string(j, "policy");
    c.seed = static_cast<std::uint64_t>(get_number_or(j, "seed", 1));
    c.validate();
    return c;
}

SimJob job_from_json(const json& j) {
    SimJob job;
    job.base = config_from_json(j);
    if (j.contains("policies")) {
        for (const auto& p : j.at("policies")) job.policies.push_back(p.get<std::string>());
    } else {
        job.policies = {job.base.policy};
    }
    if (j.contains("sweep")) {
        job.sweep_param = get_string(j.at("sweep"), "param");
        job.sweep_values = get_vector(j.at("sweep"), "values");
    }
    if (j.contains("seeds")) {
        for (const auto& s : j.at("seeds"))
            job.seeds.push_back(static_cast<std::uint64_t>(s.get<double>()));
    } else {
        job.seeds = {job.base.seed};
    }
    return job;
}

namespace {

json member_to_json(const PoolMember& m, const std::vector<std::size_t>* slots) {
    json out{{"id", m.id}, {"n", m.n}, {"k", m.k}, {"p", m.p}, {"r", m.r}, {"f", m.f.probs}};
    if (slots) out["slots"] = *slots;
    return out;
}

PoolMember member_from_json(const json& j) {
    PoolMember m;
    m.id = get_string(j, "id");
    m.n = static_cast<std::size_t>(get_number(j, "n"));
    m.k = static_cast<std::size_t>(get_number(j, "k"));
    m.p = get_number(j, "p");
    m.r = get_number(j, "r");
    m.f.n = m.n;
    m.f.probs = get_vector(j, "f");
    return m;
}

} // namespace

json pool_to_json(const BackupPool& pool) {
    json members = json::array();
    for (const auto& m : pool.members()) {
        const auto slots = pool.member_slots(m.id);
        members.push_back(member_to_json(m, &slots));
    }
    return json{{"anchor", member_to_json(pool.anchor(), nullptr)},
                {"members", members},
                {"reliability", pool.reliability()}};
}

BackupPool pool_from_json(const json& j) {
    if (!j.is_object() || !j.contains("anchor")) throw SchemaError("pool json: missing anchor");
    BackupPool pool(member_from_json(j.at("anchor")));
    if (j.contains("members")) {
        for (const auto& mj : j.at("members")) {
            std::vector<std::size_t> slots;
            if (!mj.contains("slots")) throw SchemaError("pool json: member without slots");
            for (const auto& s : mj.at("slots"))
                slots.push_back(static_cast<std::size_t>(s.get<double>()));
            pool.restore(member_from_json(mj), slots);
        }
    }
    return pool;
}

json solution_to_json(const EmbeddingSolution& sol, const PhysicalNetwork& net) {
    json map = json::object();
    for (const auto& [u, host] : sol.node_map) map[u] = host;
    json nodes = json::array();
    {
        std::set<std::string> ids;
        for (const auto& [id, v] : sol.reservation.node_cpu_primary) {
            (void)v;
            ids.insert(id);
        }
        for (const auto& [id, v] : sol.reservation.node_cpu_redundant) {
            (void)v;
            ids.insert(id);
        }
        for (const auto& id : ids) {
            const auto p = sol.reservation.node_cpu_primary.count(id)
                               ? sol.reservation.node_cpu_primary.at(id)
                               : 0.0;
            const auto r = sol.reservation.node_cpu_redundant.count(id)
                               ? sol.reservation.node_cpu_redundant.at(id)
                               : 0.0;
            nodes.push_back({{"id", id}, {"primary", p}, {"redundant", r}});
        }
    }
    json links = json::array();
    {
        std::set<std::string> keys;
        for (const auto& [k, v] : sol.reservation.link_bw_primary) {
            (void)v;
            keys.insert(k);
        }
        for (const auto& [k, v] : sol.reservation.link_bw_redundant) {
            (void)v;
            keys.insert(k);
        }
        for (const auto& key : keys) {
            const auto p = sol.reservation.link_bw_primary.count(key)
                               ? sol.reservation.link_bw_primary.at(key)
                               : 0.0;
            const auto r = sol.reservation.link_bw_redundant.count(key)
                               ? sol.reservation.link_bw_redundant.at(key)
                               : 0.0;
            const auto bar = key.find('|');
            links.push_back({{"a", key.substr(0, bar)},
                             {"b", key.substr(bar + 1)},
                             {"primary", p},
                             {"redundant", r}});
        }
    }
    json flows = json::array();
    for (const auto& cf : sol.flows) {
        json arcs = json::object();
        for (std::size_t l = 0; l < net.links.size(); ++l) {
            if (cf.arc[2 * l] > 1e-9)
                arcs[net.links[l].a + ">" + net.links[l].b] = cf.arc[2 * l];
            if (cf.arc[2 * l + 1] > 1e-9)
                arcs[net.links[l].b + ">" + net.links[l].a] = cf.arc[2 * l + 1];
        }
        flows.push_back({{"kind", cf.kind},
                         {"key", cf.key},
                         {"source", cf.source},
                         {"sink", cf.sink},
                         {"demand", cf.demand},
                         {"arcs", arcs}});
    }
    json overlaps = json::array();
    for (const auto& of : sol.overlaps) {
        json arcs = json::object();
        for (std::size_t l = 0; l < net.links.size(); ++l) {
            if (of.arc[2 * l] > 1e-9)
                arcs[net.links[l].a + ">" + net.links[l].b] = of.arc[2 * l];
            if (of.arc[2 * l + 1] > 1e-9)
                arcs[net.links[l].b + ">" + net.links[l].a] = of.arc[2 * l + 1];
        }
        overlaps.push_back({{"neighbor", of.neighbor}, {"arcs", arcs}});
    }
    return json{{"map", map},           {"objective", sol.objective}, {"nodes", nodes},
                {"links", links},       {"flows", flows},             {"overlaps", overlaps}};
}

void check_solution_json(const json& j) {
    for (const char* key : {"map", "objective", "nodes", "links", "flows", "overlaps"})
        if (!j.contains(key)) throw SchemaError(std::string("solution json: missing ") + key);
    if (!j.at("map").is_object() || !j.at("objective").is_number())
        throw SchemaError("solution json: bad field types");
    for (const auto& n : j.at("nodes"))
        for (const char* key : {"id", "primary", "redundant"})
            if (!n.contains(key)) throw SchemaError("solution json: bad node entry");
    for (const auto& l : j.at("links"))
        for (const char* key : {"a", "b", "primary", "redundant"})
            if (!l.contains(key)) throw SchemaError("solution json: bad link entry");
}

void check_pool_json(const json& j) {
    if (!j.contains("anchor") || !j.contains("members"))
        throw SchemaError("pool json: missing sections");
    for (const char* key : {"id", "n", "k", "p", "r", "f"})
        if (!j.at("anchor").contains(key)) throw SchemaError("pool json: bad anchor");
    for (const auto& m : j.at("members"))
        for (const char* key : {"id", "n", "k", "p", "r", "f", "slots"})
            if (!m.contains(key)) throw SchemaError("pool json: bad member");
}

json parse_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw SchemaError("invalid json in " + path);
    return j;
}

void write_text_file_atomic(const std::string& path, const std::string& text) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp);
        out << text;
    }
    std::filesystem::rename(tmp, path);
}

} // namespace vinfra
