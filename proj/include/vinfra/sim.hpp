#pragma once

#include "vinfra/embed.hpp"
#include "vinfra/pooling.hpp"
#include "vinfra/topology.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace vinfra {

struct ScenarioConfig {
    // substrate
    std::size_t physical_nodes = 20;
    double cpu_min = 50.0, cpu_max = 100.0;
    double physical_edge_prob = 0.4;
    double bw_min = 50.0, bw_max = 100.0;
    // workload
    std::size_t horizon = 200;
    double arrival_rate = 0.75;   // geometric inter-arrival success probability
    double departure_rate = 0.01; // geometric lease length rate
    std::size_t vinf_min = 2, vinf_max = 6;
    double demand_min = 5.0, demand_max = 20.0;
    double critical_fraction_cap = 0.9;
    double virtual_edge_prob = 0.4;
    double vbw_min = 10.0, vbw_max = 35.0;
    double failure_p = 0.01;
    double reliability = 0.9999;
    std::string policy = "share"; // share | noshare | nonr
    std::uint64_t seed = 1;
    bool drain = false; // keep running past the horizon until all leases end

    void validate() const;
};

// matches the published evaluation setup (large runs)
ScenarioConfig full_scale_config();

struct MetricsSeries {
    std::vector<double> acceptance_rate; // cumulative accepted / arrived
    std::vector<double> admitted;        // live VInf count
    std::vector<double> cpu_primary;     // utilization fractions
    std::vector<double> cpu_redundant;
    std::vector<double> bw_primary;
    std::vector<double> bw_redundant;
    std::vector<double> backup_nodes;

    std::size_t arrived = 0;
    std::size_t accepted = 0;
    double total_cpu = 0.0;
    double total_bw = 0.0;
    double final_reserved_cpu = 0.0; // zero after a drained run
    double final_reserved_bw = 0.0;
    // (request size, has critical nodes) -> (arrived, rejected)
    std::map<std::pair<std::size_t, bool>, std::pair<std::size_t, std::size_t>> rejection_profile;

    const std::vector<double>& series(const std::string& metric) const;
    static const std::vector<std::string>& metric_names();
};

PhysicalNetwork generate_physical(const ScenarioConfig& config, std::uint64_t seed);
VInfRequest generate_request(const ScenarioConfig& config, std::uint64_t seed, std::size_t slot);

MetricsSeries run(const ScenarioConfig& config);

struct CellStats {
    std::string policy;
    double sweep_value = 0.0;
    std::map<std::string, double> mean;
    std::map<std::string, double> stddev;
};

// mean and standard deviation per aggregate metric over the seeds of each
// (policy, sweep value) cell; sweep_param is "vbw_max", "reliability" or ""
std::vector<CellStats> compare_policies(const ScenarioConfig& base,
                                        const std::vector<std::string>& policies,
                                        const std::string& sweep_param,
                                        const std::vector<double>& sweep_values,
                                        const std::vector<std::uint64_t>& seeds);

// scalar summaries of one run, used for the aggregate rows
std::map<std::string, double> aggregate_metrics(const MetricsSeries& m);

std::string series_csv(const std::vector<double>& series);                  // "slot,value"
std::string aggregate_csv(const std::vector<CellStats>& cells);             // cell,policy,...
std::string rejection_profile_csv(const MetricsSeries& m);                  // size,critical,...

} // namespace vinfra
