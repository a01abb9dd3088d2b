#include "vinfra/cascade.hpp"
#include "vinfra/embed.hpp"
#include "vinfra/json_io.hpp"
#include "vinfra/lp.hpp"
#include "vinfra/pooling.hpp"
#include "vinfra/reliability.hpp"
#include "vinfra/sim.hpp"
#include "vinfra/topology.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

namespace {

using namespace vinfra;

// exit codes: 0 ok, 2 usage/schema, 3 sizing infeasible, 4 pool state
// invariant violation, 5 embedding infeasible, 6 scenario cap exceeded
constexpr int kExitSchema = 2;
constexpr int kExitInfeasibleK = 3;
constexpr int kExitPoolInvariant = 4;
constexpr int kExitEmbedInfeasible = 5;
constexpr int kExitScenarioCap = 6;

std::string fmt12(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

FailureDistribution distribution_for(std::size_t n, double p, const std::string& model_file) {
    if (model_file.empty()) return independent_distribution(n, p);
    auto model = cascade_from_json(parse_json_file(model_file));
    if (auto* load = std::get_if<LoadModelParams>(&model)) {
        if (load->n == 0) load->n = n;
        return load_based_distribution(*load);
    }
    if (auto* deg = std::get_if<DegreeModelParams>(&model)) {
        if (deg->n == 0) deg->n = n;
        return degree_worst_case_distribution(*deg);
    }
    return tree_based_distribution(std::get<TreeModelParams>(model));
}

int cmd_kcalc(std::size_t n, double p, double r, const std::string& model_file) {
    FailureDistribution f = distribution_for(n, p, model_file);
    if (f.n != n) throw SchemaError("kcalc: model node count does not match --n");
    const std::size_t k = min_backups(n, p, r, f);
    const double achieved = reliability_general(k, p, f);
    std::printf("k=%zu reliability=%s\n", k, fmt12(achieved).c_str());
    return 0;
}

int cmd_distribution(const std::string& model_file, std::size_t n_override, std::size_t trials,
                     std::uint64_t seed, const std::string& out_path) {
    auto model = cascade_from_json(parse_json_file(model_file));
    if (n_override > 0) {
        if (auto* load = std::get_if<LoadModelParams>(&model)) load->n = n_override;
        if (auto* deg = std::get_if<DegreeModelParams>(&model)) deg->n = n_override;
    }
    FailureDistribution f;
    if (trials > 0) {
        f = monte_carlo_distribution(model, trials, seed);
    } else if (auto* load = std::get_if<LoadModelParams>(&model)) {
        f = load_based_distribution(*load);
    } else if (auto* deg = std::get_if<DegreeModelParams>(&model)) {
        f = degree_worst_case_distribution(*deg);
    } else {
        f = tree_based_distribution(std::get<TreeModelParams>(model));
    }
    json out{{"n", f.n}, {"probs", f.probs}};
    const std::string text = out.dump(2) + "\n";
    if (out_path.empty())
        std::fputs(text.c_str(), stdout);
    else
        write_text_file_atomic(out_path, text);
    return 0;
}

PoolMember member_from_flags(const std::string& id, std::size_t n, double p, double r) {
    PoolMember m;
    m.id = id;
    m.n = n;
    m.p = p;
    m.r = r;
    m.f = independent_distribution(n, p);
    m.k = min_backups(n, p, r, m.f);
    return m;
}

int cmd_pool(const std::string& state_path, const std::string& action, const std::string& id,
             std::size_t n, double p, double r, bool self_check) {
    if (action == "init") {
        BackupPool pool(member_from_flags(id, n, p, r));
        const auto j = pool_to_json(pool);
        if (self_check) check_pool_json(j);
        write_text_file_atomic(state_path, j.dump(2) + "\n");
        std::printf("initialized anchor=%s k0=%zu r0'=%s\n", id.c_str(), pool.anchor().k,
                    fmt12(pool.reliability()).c_str());
        return 0;
    }
    auto j = parse_json_file(state_path);
    check_pool_json(j);
    BackupPool pool = pool_from_json(j);
    try {
        pool.check_invariants();
    } catch (const std::logic_error& e) {
        std::fprintf(stderr, "pool state violates invariants: %s\n", e.what());
        return kExitPoolInvariant;
    }
    if (action == "show") {
        std::printf("anchor=%s k0=%zu free=%zu members=%zu r0'=%s\n", pool.anchor().id.c_str(),
                    pool.anchor().k, pool.free_slots(), pool.members().size(),
                    fmt12(pool.reliability()).c_str());
        for (const auto& m : pool.members()) {
            std::printf("member id=%s n=%zu k=%zu r=%s slots=", m.id.c_str(), m.n, m.k,
                        fmt12(m.r).c_str());
            const auto slots = pool.member_slots(m.id);
            for (std::size_t i = 0; i < slots.size(); ++i)
                std::printf("%s%zu", i ? "," : "", slots[i]);
            std::printf("\n");
        }
        return 0;
    }
    if (action == "admit") {
        const auto d = pool.admit(member_from_flags(id, n, pool.anchor().p, r));
        if (d.admitted) {
            const auto out = pool_to_json(pool);
            if (self_check) check_pool_json(out);
            write_text_file_atomic(state_path, out.dump(2) + "\n");
            std::printf("admitted r0'=%s\n", fmt12(d.reliability_after).c_str());
        } else {
            std::printf("rejected reason=%s r0'=%s\n", d.reason.c_str(),
                        fmt12(d.reliability_after).c_str());
        }
        return 0;
    }
    if (action == "remove") {
        pool.remove(id);
        const auto out = pool_to_json(pool);
        if (self_check) check_pool_json(out);
        write_text_file_atomic(state_path, out.dump(2) + "\n");
        std::printf("removed r0'=%s\n", fmt12(pool.reliability()).c_str());
        return 0;
    }
    throw CLI::ValidationError("pool", "unknown action " + action);
}

int cmd_embed(const std::string& physical_path, const std::string& vinf_path, long long k_flag,
              const std::vector<std::string>& pins, const std::vector<std::string>& excludes,
              const std::string& mps_path, const std::string& out_path, bool verbatim,
              bool self_check) {
    const auto net = physical_from_json(parse_json_file(physical_path));
    const auto vinf = vinf_from_json(parse_json_file(vinf_path));
    std::size_t k = 0;
    if (k_flag >= 0) {
        k = static_cast<std::size_t>(k_flag);
    } else if (!vinf.critical_ids().empty()) {
        k = min_backups(vinf.critical_ids().size(), vinf.failure_p, vinf.reliability,
                        vinf.failure_distribution());
    }
    EmbeddingProblem prob;
    prob.expanded = expand(vinf, k);
    prob.overlap_mode = verbatim ? OverlapMode::Verbatim : OverlapMode::Scenario;
    for (const auto& pin : pins) {
        const auto eq = pin.find(':');
        if (eq == std::string::npos) throw SchemaError("embed: --pin expects virtual:physical");
        prob.pinned[pin.substr(0, eq)] = pin.substr(eq + 1);
    }
    for (const auto& x : excludes) prob.excluded_hosts.insert(x);

    if (!mps_path.empty())
        write_text_file_atomic(mps_path, emit_mps(build_program(prob, net), "EMBED"));

    auto res = solve_embedding(prob, net);
    if (!res.solution) {
        std::printf("infeasible reason=%s\n", res.reject_reason.c_str());
        return kExitEmbedInfeasible;
    }
    const auto rep = validate(*res.solution, prob, net);
    if (!rep.ok()) {
        for (const auto& msg : rep.messages) std::fprintf(stderr, "validate: %s\n", msg.c_str());
        return kExitEmbedInfeasible;
    }
    const auto j = solution_to_json(*res.solution, net);
    if (self_check) check_solution_json(j);
    const std::string text = j.dump(2) + "\n";
    if (out_path.empty())
        std::fputs(text.c_str(), stdout);
    else
        write_text_file_atomic(out_path, text);
    std::printf("feasible objective=%s\n", fmt12(res.solution->objective).c_str());
    return 0;
}

int cmd_simulate(const std::string& config_path, const std::string& outdir, bool full_scale,
                 std::size_t jobs) {
    auto j = parse_json_file(config_path);
    if (full_scale) {
        const auto full = full_scale_config();
        j["physical_nodes"] = full.physical_nodes;
        j["horizon"] = full.horizon;
        j["vinf_min"] = full.vinf_min;
        j["vinf_max"] = full.vinf_max;
        j["physical_edge_prob"] = full.physical_edge_prob;
    }
    const SimJob job = job_from_json(j);
    std::filesystem::create_directories(outdir);

    struct Cell {
        std::string policy;
        double value;
        std::uint64_t seed;
        ScenarioConfig cfg;
        MetricsSeries metrics;
    };
    std::vector<Cell> cells;
    std::vector<double> values = job.sweep_values.empty() ? std::vector<double>{0.0}
                                                          : job.sweep_values;
    for (const auto& policy : job.policies)
        for (double value : values)
            for (auto seed : job.seeds) {
                Cell c;
                c.policy = policy;
                c.value = value;
                c.seed = seed;
                c.cfg = job.base;
                c.cfg.policy = policy;
                c.cfg.seed = seed;
                if (job.sweep_param == "vbw_max") c.cfg.vbw_max = value;
                else if (job.sweep_param == "reliability") c.cfg.reliability = value;
                cells.push_back(std::move(c));
            }

    // cells are independent; run them on a bounded pool and write in order
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            cells[i].metrics = run(cells[i].cfg);
        }
    };
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (std::size_t t = 0; t < std::min(jobs, cells.size()); ++t)
            threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }

    for (const auto& c : cells) {
        const std::string stem = c.policy + "_" + fmt12(c.value) + "_" + std::to_string(c.seed);
        for (const auto& metric : MetricsSeries::metric_names())
            write_text_file_atomic(outdir + "/" + stem + "_" + metric + ".csv",
                                   series_csv(c.metrics.series(metric)));
        write_text_file_atomic(outdir + "/" + stem + "_rejections.csv",
                               rejection_profile_csv(c.metrics));
    }

    // aggregate across seeds per (policy, value)
    std::vector<CellStats> agg;
    for (const auto& policy : job.policies) {
        for (double value : values) {
            std::map<std::string, std::vector<double>> samples;
            for (const auto& c : cells)
                if (c.policy == policy && c.value == value)
                    for (const auto& [k2, v2] : aggregate_metrics(c.metrics))
                        samples[k2].push_back(v2);
            CellStats cs;
            cs.policy = policy;
            cs.sweep_value = value;
            for (const auto& [k2, v2] : samples) {
                double mean = 0.0;
                for (double s : v2) mean += s;
                mean /= static_cast<double>(v2.size());
                double var = 0.0;
                for (double s : v2) var += (s - mean) * (s - mean);
                cs.mean[k2] = mean;
                cs.stddev[k2] = v2.size() > 1 ? std::sqrt(var / static_cast<double>(v2.size() - 1))
                                              : 0.0;
            }
            agg.push_back(std::move(cs));
        }
    }
    write_text_file_atomic(outdir + "/aggregate.csv", aggregate_csv(agg));

    std::printf("cells=%zu outdir=%s\n", cells.size(), outdir.c_str());
    std::printf("%-8s %-10s %-16s %-16s\n", "policy", "sweep", "acceptance", "mean_admitted");
    for (const auto& cs : agg)
        std::printf("%-8s %-10s %-16s %-16s\n", cs.policy.c_str(), fmt12(cs.sweep_value).c_str(),
                    fmt12(cs.mean.at("acceptance_rate")).c_str(),
                    fmt12(cs.mean.at("mean_admitted")).c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"survivable virtual infrastructure sizing, pooling and embedding"};
    app.require_subcommand(1);

    // kcalc
    auto* kcalc = app.add_subcommand("kcalc", "minimum backups for a reliability target");
    std::size_t n = 0;
    double p = 0.01, r = 0.99999;
    std::string model_file;
    kcalc->add_option("--n", n, "critical node count")->required();
    kcalc->add_option("--p", p, "physical failure probability")->required();
    kcalc->add_option("--r", r, "reliability target")->required();
    kcalc->add_option("--model-file", model_file, "cascade model JSON (default independent)");

    // distribution
    auto* dist = app.add_subcommand("distribution", "failure distribution of a cascade model");
    std::string dist_model, dist_out;
    std::size_t dist_n = 0, trials = 0;
    std::uint64_t seed = 1;
    dist->add_option("--model-file", dist_model, "cascade model JSON")->required();
    dist->add_option("--n", dist_n, "override node count");
    dist->add_option("--trials", trials, "Monte-Carlo trials (0 = closed form)");
    dist->add_option("--seed", seed, "Monte-Carlo seed");
    dist->add_option("-o,--out", dist_out, "output path (default stdout)");

    // pool
    auto* pool = app.add_subcommand("pool", "manage a backup pool state file");
    std::string pool_state, pool_action, pool_id;
    std::size_t pool_n = 0;
    double pool_p = 0.01, pool_r = 0.999;
    bool self_check = false;
    pool->add_option("action", pool_action, "init|show|admit|remove")->required();
    pool->add_option("--state", pool_state, "state file path")->required();
    pool->add_option("--id", pool_id, "anchor or member id");
    pool->add_option("--n", pool_n, "critical node count");
    pool->add_option("--p", pool_p, "failure probability (init only)");
    pool->add_option("--r", pool_r, "reliability guarantee");
    pool->add_flag("--self-check", self_check, "validate outputs against the schema");

    // embed
    auto* embed = app.add_subcommand("embed", "embed one request on a physical network");
    std::string physical_path, vinf_path, mps_path, solution_path;
    long long k_flag = -1;
    std::vector<std::string> pins, excludes;
    bool verbatim = false;
    embed->add_option("--physical", physical_path, "physical network JSON")->required();
    embed->add_option("--vinf", vinf_path, "request JSON")->required();
    embed->add_option("--k", k_flag, "backup count override (default: sized from the request)");
    embed->add_option("--pin", pins, "virtual:physical placement pin (repeatable)");
    embed->add_option("--exclude", excludes, "excluded physical host (repeatable)");
    embed->add_option("--emit-mps", mps_path, "also dump the program as MPS");
    embed->add_option("-o,--out", solution_path, "solution JSON path (default stdout)");
    embed->add_flag("--verbatim-overlap", verbatim, "reserve stand-in flows without overlap");
    embed->add_flag("--self-check", self_check, "validate outputs against the schema");

    // simulate
    auto* sim = app.add_subcommand("simulate", "run the arrival/departure simulation");
    std::string config_path, outdir = ".";
    bool full_scale = false;
    std::size_t jobs = 1;
    sim->add_option("--config", config_path, "scenario config JSON")->required();
    sim->add_option("--outdir", outdir, "output directory");
    sim->add_flag("--full-scale", full_scale, "use the large published setup");
    sim->add_option("--jobs", jobs, "parallel cells");

    try {
        app.parse(argc, argv);
        if (kcalc->parsed()) return cmd_kcalc(n, p, r, model_file);
        if (dist->parsed()) return cmd_distribution(dist_model, dist_n, trials, seed, dist_out);
        if (pool->parsed())
            return cmd_pool(pool_state, pool_action, pool_id, pool_n, pool_p, pool_r, self_check);
        if (embed->parsed())
            return cmd_embed(physical_path, vinf_path, k_flag, pins, excludes, mps_path,
                             solution_path, verbatim, self_check);
        if (sim->parsed()) return cmd_simulate(config_path, outdir, full_scale, jobs);
        return kExitSchema;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitSchema;
    } catch (const SizeError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitScenarioCap;
    } catch (const InfeasibleError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInfeasibleK;
    } catch (const SchemaError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitSchema;
    } catch (const NotFoundError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitSchema;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitSchema;
    } catch (const std::logic_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitPoolInvariant;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitSchema;
    }
}
