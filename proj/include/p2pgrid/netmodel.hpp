#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "p2pgrid/errors.hpp"

namespace p2pgrid {

enum class AgentRole { none, prosumer, consumer };
enum class GenKind { utility_dg, pv_prosumer, grid_root };

struct Generator {
    int node = 0;
    GenKind kind = GenKind::utility_dg;
    double p_max_kw = 0.0;
    double q_min_kvar = 0.0;
    double q_max_kvar = 0.0;
    double cost_usd_mwh = 0.0;

    friend bool operator==(const Generator&, const Generator&) = default;
};

struct Node {
    int id = 0;
    double load_p_kw = 0.0;
    double load_q_kvar = 0.0;
    double v_min_pu = 0.90;
    double v_max_pu = 1.05;
    AgentRole role = AgentRole::none;
    std::optional<Generator> generator;

    friend bool operator==(const Node&, const Node&) = default;
};

// A line always points away from the root: `from` is the ancestor side.
struct Line {
    int from = 0;
    int to = 0;
    double r_pu = 0.0;
    double x_pu = 0.0;
    double i2_max_pu = 0.0; // cap on squared current magnitude
    double s_max_kva = 0.0; // apparent-power cap at the sending end

    friend bool operator==(const Line&, const Line&) = default;
};

// Radial distribution network. Immutable after load_scenario/finalize:
// safe to share read-only across parallel workers.
struct Network {
    std::vector<Node> nodes;
    std::vector<Line> lines;
    int root = 0;
    double base_kv = 12.66;
    double base_mva = 10.0;
    std::map<int, int> zones; // node id -> zone id

    // Derived indexing, built by finalize(). Not serialized.
    std::map<int, int> id_to_index;
    std::vector<int> line_into_node;           // node index -> line index (-1 at root)
    std::vector<std::vector<int>> lines_out;   // node index -> outgoing line indices

    double z_base_ohm() const { return base_kv * base_kv / base_mva; }
    int index_of(int node_id) const;
    const Node& node_by_id(int node_id) const;
    int zone_of(int node_id) const; // 0 when unzoned
    bool has_generator_of_kind(GenKind k) const;

    // Rebuilds the derived indexing; throws ValidationError if the edge set
    // is not a spanning tree rooted at root.
    void finalize();

    friend bool operator==(const Network& a, const Network& b) {
        return a.nodes == b.nodes && a.lines == b.lines && a.root == b.root &&
               a.base_kv == b.base_kv && a.base_mva == b.base_mva && a.zones == b.zones;
    }
};

struct Profiles {
    int dt_minutes = 15;
    int horizon = 96;
    double fit_usd_mwh = 20.0;
    double voll_usd_mwh = 1000.0;
    // Load multiplier applied to a node's base load (constant power factor):
    // a network-wide default series plus optional per-node overrides.
    std::vector<double> default_load_mult;
    std::map<int, std::vector<double>> load_mult_overrides;
    // pv_fraction[node id][t]: available fraction of installed PV capacity.
    std::map<int, std::vector<double>> pv_fraction;
    std::vector<double> lmp_usd_mwh; // upstream LMP per interval

    double dt_hours() const { return dt_minutes / 60.0; }
    double load_mult_at(int interval, int node_id) const {
        auto it = load_mult_overrides.find(node_id);
        if (it != load_mult_overrides.end()) return it->second[interval];
        return default_load_mult[interval];
    }
    double pv_fraction_at(int interval, int node_id) const {
        auto it = pv_fraction.find(node_id);
        return it == pv_fraction.end() ? 0.0 : it->second[interval];
    }
};

struct OutageEvent {
    std::string element; // "tie" or "line <from> <to>"
    int start = 0;       // interval index
    int duration = 1;    // intervals

    friend bool operator==(const OutageEvent&, const OutageEvent&) = default;
};

struct BiddingParams {
    // Cap on the reference price agents derive offers from. Keeps asks in a
    // competitive band even when the scarcity signal reaches VOLL.
    double price_cap_usd_mwh = 85.0;
    // Fraction of the FIT..reference band that sellers skip in islanded
    // intervals (they raise their floors during emergencies).
    double emergency_uplift = 0.6;
    // Share of consumer load offered as bids in normal operation.
    double demand_fraction = 1.0;
};

struct ScenarioConfig {
    std::string scenario_path;
    std::string feeder_path;
    std::string profiles_path;
    std::uint64_t seed = 1;
    bool p2p_enabled = true;
    std::vector<OutageEvent> outages;
    double tie_capacity_kw = 10000.0;
    double vet_margin = 0.02;
    BiddingParams bidding;
};

struct Scenario {
    Network network;
    Profiles profiles;
    ScenarioConfig config;
};

// Feeder / profile / scenario file ingestion. Parse errors carry file name,
// line number and field context; validation errors name the violated rule.
Network load_feeder(const std::string& path);
Profiles load_profiles(const std::string& path);
Scenario load_scenario(const std::string& scenario_path);

Network parse_feeder_text(const std::string& text, const std::string& origin);
Profiles parse_profiles_text(const std::string& text, const std::string& origin);

// Empty result means the network is a valid tree; otherwise one message per
// violation (cycles, disconnected nodes, multi-parent nodes).
std::vector<std::string> validate_radial(const Network& net);

// Parent of `node_id` on the unique path to the root. Root has no ancestor.
int ancestor(const Network& net, int node_id);

// Feeder serialization; parse_feeder_text(serialize_feeder(n)) == n.
std::string serialize_feeder(const Network& net);

// Cross-checks profiles against the network (PV nodes exist, VOLL dominates
// generation costs and LMPs, horizon sane).
void validate_profiles(const Network& net, const Profiles& prof);

} // namespace p2pgrid
