#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "vinfra/embed.hpp"
#include "vinfra/rng.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

using namespace vinfra;

namespace {

// The two-node request with one critical node and two stand-in backups,
// deployed on a path substrate so both stand-in flows share one link.
struct OverlapFixture {
    PhysicalNetwork net;
    EmbeddingProblem prob;
};

OverlapFixture overlap_fixture(OverlapMode mode) {
    OverlapFixture f;
    f.net.nodes = {{"mu1", 1, ""}, {"mu2", 1, ""}, {"mu3", 1, ""}, {"mu4", 1, ""}};
    f.net.links = {{"mu1", "mu2", 5}, {"mu2", "mu4", 5}, {"mu3", "mu4", 5}};
    VInfRequest v;
    v.nodes = {{"u", 1, true}, {"v", 1, false}};
    v.edges = {{"u", "v", 1}};
    v.reliability = 0.999;
    v.failure_p = 0.01;
    f.prob.expanded = expand(v, 2);
    f.prob.pinned = {{"u", "mu3"}, {"v", "mu4"}, {"_bk0", "mu1"}, {"_bk1", "mu2"}};
    f.prob.overlap_mode = mode;
    return f;
}

PhysicalNetwork random_network(Rng& rng, std::size_t n, double edge_prob, double cap_lo,
                               double cap_hi, double bw_lo, double bw_hi) {
    PhysicalNetwork net;
    for (std::size_t i = 0; i < n; ++i)
        net.nodes.push_back({"p" + std::to_string(i),
                             cap_lo + (cap_hi - cap_lo) * rng.next_double(), ""});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (rng.next_bool(edge_prob))
                net.links.push_back({net.nodes[i].id, net.nodes[j].id,
                                     bw_lo + (bw_hi - bw_lo) * rng.next_double()});
    return net;
}

VInfRequest random_vinf(Rng& rng, std::size_t n, bool with_critical) {
    VInfRequest v;
    for (std::size_t i = 0; i < n; ++i)
        v.nodes.push_back({"v" + std::to_string(i), 2.0 + 4.0 * rng.next_double(), false});
    // random spanning-ish connectivity
    for (std::size_t i = 1; i < n; ++i)
        v.edges.push_back({v.nodes[static_cast<std::size_t>(rng.next_int(
                               0, static_cast<std::int64_t>(i) - 1))].id,
                           v.nodes[i].id, 1.0 + 2.0 * rng.next_double()});
    if (with_critical) {
        v.nodes[0].critical = true;
        v.reliability = 0.99;
        v.failure_p = 0.05;
    }
    return v;
}

// exhaustive mapping oracle: best objective over every injective node map,
// with flows solved per map
double exhaustive_mapping_optimum(const EmbeddingProblem& prob, const PhysicalNetwork& net) {
    std::vector<std::string> virtuals;
    for (const auto& n : prob.expanded.base.nodes) virtuals.push_back(n.id);
    for (const auto& b : prob.expanded.backup_ids) virtuals.push_back(b);
    std::vector<std::size_t> hosts(net.nodes.size());
    for (std::size_t i = 0; i < hosts.size(); ++i) hosts[i] = i;

    double best = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> pick(virtuals.size());
    std::vector<bool> used(net.nodes.size(), false);
    // iterate over all injective assignments
    std::function<void(std::size_t)> rec = [&](std::size_t depth) {
        if (depth == virtuals.size()) {
            std::map<std::string, std::string> fixedmap;
            double compute_part = 0.0;
            bool ok = true;
            for (std::size_t i = 0; i < virtuals.size(); ++i) {
                const auto& host = net.nodes[pick[i]];
                const auto& u = virtuals[i];
                double demand = 0.0;
                for (const auto& vn : prob.expanded.base.nodes)
                    if (vn.id == u) demand = vn.cpu;
                if (u.rfind("_bk", 0) == 0) demand = prob.expanded.backup_cpu;
                if (demand > net.available_cpu(host.id) + 1e-9) ok = false;
                fixedmap[u] = host.id;
                compute_part += demand / (net.available_cpu(host.id) + prob.epsilon);
            }
            if (!ok) return;
            // flows for this map via an embedding problem pinned everywhere
            EmbeddingProblem sub = prob;
            sub.pinned = fixedmap;
            auto res = solve_embedding(sub, net);
            if (res.solution) best = std::min(best, res.solution->objective);
            return;
        }
        for (std::size_t h = 0; h < net.nodes.size(); ++h) {
            if (used[h]) continue;
            used[h] = true;
            pick[depth] = h;
            rec(depth + 1);
            used[h] = false;
        }
    };
    rec(0);
    return best;
}

double redundant_on(const EmbeddingSolution& sol, const std::string& a, const std::string& b) {
    const auto it = sol.reservation.link_bw_redundant.find(link_key(a, b));
    return it == sol.reservation.link_bw_redundant.end() ? 0.0 : it->second;
}

} // namespace

TEST_CASE("program structure") {
    SUBCASE("single virtual node, no edges") {
        PhysicalNetwork net;
        net.nodes = {{"p0", 10, ""}, {"p1", 20, ""}, {"p2", 5, ""}};
        VInfRequest v;
        v.nodes = {{"a", 4, false}};
        EmbeddingProblem prob;
        prob.expanded = expand(v, 0);
        auto lp = build_program(prob, net);
        std::size_t rho = 0, onemap = 0, compute = 0;
        for (const auto& var : lp.variables()) rho += var.name.rfind("rho|", 0) == 0;
        for (const auto& row : lp.constraints()) {
            onemap += row.name.rfind("onemap|", 0) == 0;
            compute += row.name.rfind("compute|", 0) == 0;
        }
        CHECK(rho == 3);
        CHECK(onemap == 1);
        CHECK(compute == 3);
        auto res = solve_embedding(prob, net);
        REQUIRE(res.solution);
        // alpha weighting prefers the roomiest host
        CHECK(res.solution->node_map.at("a") == "p1");
    }
    SUBCASE("no critical nodes means a plain flow program") {
        Rng rng(8);
        auto net = random_network(rng, 5, 0.9, 10, 20, 10, 20);
        auto v = random_vinf(rng, 3, false);
        EmbeddingProblem prob;
        prob.expanded = expand(v, 0);
        auto lp = build_program(prob, net);
        for (const auto& var : lp.variables()) {
            CHECK(var.name.rfind("f|L1", 0) != 0);
            CHECK(var.name.rfind("f|L2", 0) != 0);
            CHECK(var.name.rfind("o|", 0) != 0);
        }
    }
    SUBCASE("omitting the backup interconnects removes their flows") {
        VInfRequest v;
        v.nodes = {{"a", 1, true}, {"b", 1, true}};
        v.edges = {{"a", "b", 2}};
        v.reliability = 0.9;
        v.failure_p = 0.05;
        PhysicalNetwork net;
        for (int i = 0; i < 6; ++i) net.nodes.push_back({"p" + std::to_string(i), 4, ""});
        for (int i = 0; i < 6; ++i)
            for (int j = i + 1; j < 6; ++j)
                net.links.push_back({"p" + std::to_string(i), "p" + std::to_string(j), 20});
        EmbeddingProblem prob;
        prob.expanded = expand(v, 2);
        REQUIRE(!prob.expanded.l2.empty());
        auto with = build_program(prob, net);
        bool has_l2 = false;
        for (const auto& var : with.variables()) has_l2 = has_l2 || var.name.rfind("f|L2", 0) == 0;
        CHECK(has_l2);
        prob.omit_l2 = true;
        auto without = build_program(prob, net);
        for (const auto& var : without.variables()) CHECK(var.name.rfind("f|L2", 0) != 0);
    }
    SUBCASE("overlap row count follows the deduplicated per-backup structure") {
        // path request c1-c2-c3-d embedded on a 7-node substrate
        VInfRequest v;
        v.nodes = {{"c1", 1, true}, {"c2", 1, true}, {"c3", 1, true}, {"d", 1, false}};
        v.edges = {{"c1", "c2", 1}, {"c2", "c3", 1}, {"c3", "d", 1}};
        v.reliability = 0.99;
        v.failure_p = 0.05;
        Rng rng(17);
        auto net = random_network(rng, 7, 0.8, 10, 20, 10, 20);
        EmbeddingProblem prob;
        prob.expanded = expand(v, 2);
        REQUIRE(scenario_set(prob.expanded).size() == 6); // C(3,1) + C(3,2)
        auto lp = build_program(prob, net);
        std::size_t overlap_rows = 0;
        for (const auto& row : lp.constraints()) overlap_rows += row.name.rfind("ov|", 0) == 0;
        // per destination v: C(q_v, min(m, q_v)) maximal subsets (q = critical
        // neighbors of v); times k backups, times directed arcs
        const std::size_t arcs = 2 * net.links.size();
        std::map<std::string, std::set<std::string>> crit_nbrs;
        for (const auto& t : prob.expanded.l1) crit_nbrs[t.neighbor].insert(t.critical);
        std::size_t expect = 0;
        auto choose = [](std::size_t n, std::size_t k) {
            double c = 1.0;
            for (std::size_t i = 0; i < k; ++i)
                c = c * static_cast<double>(n - i) / static_cast<double>(i + 1);
            return static_cast<std::size_t>(c + 0.5);
        };
        for (const auto& [vv, cs] : crit_nbrs) {
            (void)vv;
            const std::size_t q = cs.size();
            expect += choose(q, std::min<std::size_t>(2, q)) * 2 * arcs;
        }
        CHECK(overlap_rows == expect);
    }
}

TEST_CASE("shared-link overlap fixture") {
    SUBCASE("scenario mode reserves one unit on the shared link") {
        auto f = overlap_fixture(OverlapMode::Scenario);
        auto res = solve_embedding(f.prob, f.net);
        REQUIRE(res.solution);
        CHECK(res.solution->node_map.at("u") == "m" + std::string("u3"));
        CHECK(redundant_on(*res.solution, "mu2", "mu4") == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(redundant_on(*res.solution, "mu1", "mu2") == doctest::Approx(1.0).epsilon(1e-6));
        auto rep = validate(*res.solution, f.prob, f.net);
        CHECK(rep.ok());
        // necessity: each single-failure recovery pushes one full unit over
        // the shared link, so less than 1 cannot cover any scenario
        for (const auto& cf : res.solution->flows) {
            if (cf.kind != "L1") continue;
            double through = 0.0;
            const auto li = f.net.link_index("mu2", "mu4");
            REQUIRE(li);
            through += cf.arc[2 * *li] + cf.arc[2 * *li + 1];
            CHECK(through == doctest::Approx(1.0).epsilon(1e-6));
        }
    }
    SUBCASE("verbatim mode needs two units") {
        auto f = overlap_fixture(OverlapMode::Verbatim);
        auto res = solve_embedding(f.prob, f.net);
        REQUIRE(res.solution);
        CHECK(redundant_on(*res.solution, "mu2", "mu4") == doctest::Approx(2.0).epsilon(1e-6));
    }
    SUBCASE("dumped program solves to the same reservation externally") {
        auto f = overlap_fixture(OverlapMode::Scenario);
        auto lp = build_program(f.prob, f.net);
        const auto text = emit_mps(lp);
        CHECK(text.find("'INTORG'") != std::string::npos);
        CHECK(text.find("ENDATA") != std::string::npos);
    }
}

TEST_CASE("solve_embedding behavior") {
    SUBCASE("over-demand is infeasible") {
        PhysicalNetwork net;
        net.nodes = {{"p0", 5, ""}, {"p1", 6, ""}};
        net.links = {{"p0", "p1", 10}};
        VInfRequest v;
        v.nodes = {{"a", 50, false}};
        EmbeddingProblem prob;
        prob.expanded = expand(v, 0);
        auto res = solve_embedding(prob, net);
        CHECK_FALSE(res.solution);
        CHECK(res.reject_reason == "relaxation-infeasible");
    }
    SUBCASE("exclusions never improve the relaxation objective") {
        Rng rng(99);
        for (int t = 0; t < 5; ++t) {
            auto net = random_network(rng, 6, 0.8, 10, 20, 10, 25);
            if (net.links.size() < 4) continue;
            auto v = random_vinf(rng, 3, true);
            EmbeddingProblem prob;
            prob.expanded = expand(v, 1);
            auto base_lp = build_program(prob, net);
            const auto base = solve(base_lp, true);
            if (base.status != LpStatus::Optimal) continue;
            prob.excluded_hosts = {net.nodes[0].id};
            auto excl_lp = build_program(prob, net);
            const auto excl = solve(excl_lp, true);
            if (excl.status != LpStatus::Optimal) continue;
            CHECK(excl.objective >= base.objective - 1e-9);
        }
    }
    SUBCASE("validation flags an injected conservation fault") {
        auto f = overlap_fixture(OverlapMode::Scenario);
        auto res = solve_embedding(f.prob, f.net);
        REQUIRE(res.solution);
        auto corrupted = *res.solution;
        REQUIRE(!corrupted.flows.empty());
        corrupted.flows[0].arc[0] += 1.0;
        auto rep = validate(corrupted, f.prob, f.net);
        CHECK_FALSE(rep.ok());
        CHECK(rep.max_violation.at("conservation") > 0.5);
        bool localized = false;
        for (const auto& msg : rep.messages)
            localized = localized || msg.find(corrupted.flows[0].key) != std::string::npos;
        CHECK(localized);
    }
    SUBCASE("relax-and-round never beats the exhaustive mapping oracle") {
        Rng rng(2718);
        int produced = 0;
        double worst_gap = 0.0;
        for (int t = 0; t < 8; ++t) {
            auto net = random_network(rng, 5, 0.9, 8, 16, 8, 16);
            if (net.links.size() < 6) continue;
            const bool with_critical = t % 2 == 0;
            auto v = random_vinf(rng, 3, with_critical);
            EmbeddingProblem prob;
            prob.expanded = expand(v, with_critical ? 1 : 0);
            auto res = solve_embedding(prob, net);
            if (!res.solution) continue;
            auto rep = validate(*res.solution, prob, net);
            CHECK(rep.ok());
            const double oracle = exhaustive_mapping_optimum(prob, net);
            REQUIRE(oracle < std::numeric_limits<double>::infinity());
            CHECK(res.solution->objective >= oracle - 1e-6);
            worst_gap = std::max(worst_gap, (res.solution->objective - oracle) /
                                                std::max(oracle, 1e-12));
            ++produced;
        }
        CHECK(produced >= 3);
        MESSAGE("worst relative rounding gap: ", worst_gap);
    }
    SUBCASE("rack separation spreads base nodes") {
        PhysicalNetwork net;
        for (int i = 0; i < 6; ++i)
            net.nodes.push_back({"p" + std::to_string(i), 10, i < 3 ? "r0" : "r1"});
        for (int i = 0; i < 6; ++i)
            for (int j = i + 1; j < 6; ++j)
                net.links.push_back({"p" + std::to_string(i), "p" + std::to_string(j), 30});
        VInfRequest v;
        v.nodes = {{"a", 2, false}, {"b", 2, false}};
        v.edges = {{"a", "b", 1}};
        EmbeddingProblem prob;
        prob.expanded = expand(v, 0);
        prob.rack_separation = true;
        auto res = solve_embedding(prob, net);
        REQUIRE(res.solution);
        const auto* ra = net.find_node(res.solution->node_map.at("a"));
        const auto* rb = net.find_node(res.solution->node_map.at("b"));
        CHECK(ra->rack != rb->rack);
    }
}

TEST_CASE("apply and release") {
    Rng rng(31);
    auto net = random_network(rng, 5, 1.0, 10, 20, 20, 30);
    const auto base_nodes = net.nodes;
    const auto base_links = net.links;
    auto v1 = random_vinf(rng, 3, false);
    auto v2 = random_vinf(rng, 2, false);
    EmbeddingProblem p1, p2;
    p1.expanded = expand(v1, 0);
    p2.expanded = expand(v2, 0);
    auto r1 = solve_embedding(p1, net);
    auto r2 = solve_embedding(p2, net);
    REQUIRE(r1.solution);
    REQUIRE(r2.solution);

    SUBCASE("apply then release restores capacities bit for bit") {
        std::vector<double> before;
        for (const auto& n : net.nodes) before.push_back(net.available_cpu(n.id));
        for (std::size_t l = 0; l < net.links.size(); ++l) before.push_back(net.available_bw(l));
        net.apply("lease-1", r1.solution->reservation);
        CHECK(net.available_cpu(net.nodes[0].id) <= before[0]);
        net.release("lease-1");
        std::vector<double> after;
        for (const auto& n : net.nodes) after.push_back(net.available_cpu(n.id));
        for (std::size_t l = 0; l < net.links.size(); ++l) after.push_back(net.available_bw(l));
        REQUIRE(before.size() == after.size());
        for (std::size_t i = 0; i < before.size(); ++i) CHECK(before[i] == after[i]);
    }
    SUBCASE("apply order does not matter") {
        net.apply("a", r1.solution->reservation);
        net.apply("b", r2.solution->reservation);
        std::vector<double> ab;
        for (const auto& n : net.nodes) ab.push_back(net.available_cpu(n.id));
        net.release("a");
        net.release("b");
        net.apply("b", r2.solution->reservation);
        net.apply("a", r1.solution->reservation);
        std::vector<double> ba;
        for (const auto& n : net.nodes) ba.push_back(net.available_cpu(n.id));
        for (std::size_t i = 0; i < ab.size(); ++i) CHECK(ab[i] == ba[i]);
    }
    SUBCASE("double release errors") {
        net.apply("x", r1.solution->reservation);
        net.release("x");
        CHECK_THROWS_AS(net.release("x"), NotFoundError);
    }
    SUBCASE("oversubscription errors") {
        Reservation huge;
        huge.node_cpu_primary[net.nodes[0].id] = 1e9;
        CHECK_THROWS_AS(net.apply("huge", huge), CapacityError);
    }
}
