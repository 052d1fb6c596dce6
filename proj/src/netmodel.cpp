#include "p2pgrid/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <queue>
#include <sstream>

namespace p2pgrid {

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct LineTokens {
    int lineno;
    std::vector<std::string> tok;
};

// Strips '#' comments, splits remaining lines into whitespace tokens.
std::vector<LineTokens> tokenize(const std::string& text) {
    std::vector<LineTokens> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        LineTokens lt;
        lt.lineno = lineno;
        std::string t;
        while (ls >> t) lt.tok.push_back(t);
        if (!lt.tok.empty()) out.push_back(std::move(lt));
    }
    return out;
}

[[noreturn]] void parse_fail(const std::string& origin, int lineno, const std::string& what) {
    std::ostringstream ss;
    ss << origin << ":" << lineno << ": " << what;
    throw ParseError(ss.str());
}

double to_num(const std::string& origin, int lineno, const std::string& s, const char* field) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        parse_fail(origin, lineno, std::string("expected number for ") + field + ", got '" + s + "'");
    }
}

int to_int(const std::string& origin, int lineno, const std::string& s, const char* field) {
    try {
        std::size_t pos = 0;
        long v = std::stol(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return static_cast<int>(v);
    } catch (const std::exception&) {
        parse_fail(origin, lineno, std::string("expected integer for ") + field + ", got '" + s + "'");
    }
}

void need(const std::string& origin, const LineTokens& lt, std::size_t n) {
    if (lt.tok.size() != n) {
        std::ostringstream ss;
        ss << "record '" << lt.tok[0] << "' needs " << n - 1 << " fields, got " << lt.tok.size() - 1;
        parse_fail(origin, lt.lineno, ss.str());
    }
}

AgentRole parse_role(const std::string& origin, int lineno, const std::string& s) {
    if (s == "none") return AgentRole::none;
    if (s == "prosumer") return AgentRole::prosumer;
    if (s == "consumer") return AgentRole::consumer;
    parse_fail(origin, lineno, "unknown agent role '" + s + "' (none|prosumer|consumer)");
}

GenKind parse_kind(const std::string& origin, int lineno, const std::string& s) {
    if (s == "dg") return GenKind::utility_dg;
    if (s == "pv") return GenKind::pv_prosumer;
    if (s == "grid") return GenKind::grid_root;
    parse_fail(origin, lineno, "unknown generator kind '" + s + "' (dg|pv|grid)");
}

const char* role_name(AgentRole r) {
    switch (r) {
        case AgentRole::prosumer: return "prosumer";
        case AgentRole::consumer: return "consumer";
        default: return "none";
    }
}

const char* kind_name(GenKind k) {
    switch (k) {
        case GenKind::utility_dg: return "dg";
        case GenKind::pv_prosumer: return "pv";
        default: return "grid";
    }
}

} // namespace

int Network::index_of(int node_id) const {
    auto it = id_to_index.find(node_id);
    if (it == id_to_index.end())
        throw ValidationError("unknown node id " + std::to_string(node_id));
    return it->second;
}

const Node& Network::node_by_id(int node_id) const { return nodes[index_of(node_id)]; }

int Network::zone_of(int node_id) const {
    auto it = zones.find(node_id);
    return it == zones.end() ? 0 : it->second;
}

bool Network::has_generator_of_kind(GenKind k) const {
    return std::any_of(nodes.begin(), nodes.end(), [k](const Node& n) {
        return n.generator && n.generator->kind == k;
    });
}

void Network::finalize() {
    id_to_index.clear();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (!id_to_index.emplace(nodes[i].id, static_cast<int>(i)).second)
            throw ValidationError("duplicate node id " + std::to_string(nodes[i].id));
    }
    auto viol = validate_radial(*this);
    if (!viol.empty()) {
        std::string msg = "network is not a rooted tree:";
        for (const auto& v : viol) msg += " " + v + ";";
        throw ValidationError(msg);
    }
    line_into_node.assign(nodes.size(), -1);
    lines_out.assign(nodes.size(), {});
    for (std::size_t li = 0; li < lines.size(); ++li) {
        line_into_node[index_of(lines[li].to)] = static_cast<int>(li);
        lines_out[index_of(lines[li].from)].push_back(static_cast<int>(li));
    }
}

std::vector<std::string> validate_radial(const Network& net) {
    std::vector<std::string> viol;
    std::map<int, int> idx;
    for (std::size_t i = 0; i < net.nodes.size(); ++i) idx[net.nodes[i].id] = static_cast<int>(i);

    if (!idx.count(net.root)) {
        viol.push_back("root node " + std::to_string(net.root) + " does not exist");
        return viol;
    }
    if (net.lines.size() != net.nodes.size() - 1) {
        std::ostringstream ss;
        ss << "edge count " << net.lines.size() << " != node count - 1 ("
           << net.nodes.size() - 1 << "), not a tree";
        viol.push_back(ss.str());
    }

    // Each non-root node needs exactly one parent.
    std::map<int, int> parent_count;
    std::map<int, std::vector<int>> adj; // downstream adjacency by node id
    for (const auto& ln : net.lines) {
        if (!idx.count(ln.from)) viol.push_back("line references unknown node " + std::to_string(ln.from));
        if (!idx.count(ln.to)) viol.push_back("line references unknown node " + std::to_string(ln.to));
        parent_count[ln.to]++;
        adj[ln.from].push_back(ln.to);
    }
    if (!viol.empty() && (!idx.count(net.root))) return viol;
    for (const auto& [id, cnt] : parent_count) {
        if (id == net.root)
            viol.push_back("root node " + std::to_string(id) + " has an incoming line");
        else if (cnt > 1)
            viol.push_back("node " + std::to_string(id) + " has " + std::to_string(cnt) +
                           " parents (cycle or duplicate line)");
    }

    // Reachability from the root along downstream edges.
    std::map<int, bool> seen;
    std::queue<int> q;
    q.push(net.root);
    seen[net.root] = true;
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        for (int v : adj[u]) {
            if (seen[v]) {
                viol.push_back("cycle detected reaching node " + std::to_string(v) + " twice");
                continue;
            }
            seen[v] = true;
            q.push(v);
        }
    }
    for (const auto& n : net.nodes)
        if (!seen[n.id]) viol.push_back("node " + std::to_string(n.id) + " unreachable from root");

    return viol;
}

int ancestor(const Network& net, int node_id) {
    if (node_id == net.root)
        throw ValidationError("root node has no ancestor");
    int li = net.line_into_node[net.index_of(node_id)];
    if (li < 0) throw ValidationError("node " + std::to_string(node_id) + " has no parent line");
    return net.lines[li].from;
}

Network parse_feeder_text(const std::string& text, const std::string& origin) {
    Network net;
    net.zones.clear();
    bool have_base = false, have_root = false;
    std::map<int, int> gen_lineno;

    for (const auto& lt : tokenize(text)) {
        const auto& t = lt.tok;
        if (t[0] == "base") {
            need(origin, lt, 3);
            net.base_kv = to_num(origin, lt.lineno, t[1], "base kV");
            net.base_mva = to_num(origin, lt.lineno, t[2], "base MVA");
            if (net.base_kv <= 0 || net.base_mva <= 0)
                parse_fail(origin, lt.lineno, "base kV and MVA must be positive");
            have_base = true;
        } else if (t[0] == "root") {
            need(origin, lt, 2);
            net.root = to_int(origin, lt.lineno, t[1], "root node id");
            have_root = true;
        } else if (t[0] == "node") {
            need(origin, lt, 7);
            Node n;
            n.id = to_int(origin, lt.lineno, t[1], "node id");
            n.load_p_kw = to_num(origin, lt.lineno, t[2], "load_p_kw");
            n.load_q_kvar = to_num(origin, lt.lineno, t[3], "load_q_kvar");
            n.v_min_pu = to_num(origin, lt.lineno, t[4], "v_min");
            n.v_max_pu = to_num(origin, lt.lineno, t[5], "v_max");
            n.role = parse_role(origin, lt.lineno, t[6]);
            if (!(n.v_min_pu > 0 && n.v_min_pu < n.v_max_pu))
                throw ValidationError(origin + ":" + std::to_string(lt.lineno) +
                                      ": node " + std::to_string(n.id) +
                                      " violates 0 < v_min < v_max");
            if (n.load_p_kw < 0)
                throw ValidationError(origin + ":" + std::to_string(lt.lineno) +
                                      ": node " + std::to_string(n.id) + " has negative load_p");
            net.nodes.push_back(n);
        } else if (t[0] == "line") {
            need(origin, lt, 7);
            Line l;
            l.from = to_int(origin, lt.lineno, t[1], "from");
            l.to = to_int(origin, lt.lineno, t[2], "to");
            double r_ohm = to_num(origin, lt.lineno, t[3], "r_ohm");
            double x_ohm = to_num(origin, lt.lineno, t[4], "x_ohm");
            l.i2_max_pu = to_num(origin, lt.lineno, t[5], "i2_max_pu");
            l.s_max_kva = to_num(origin, lt.lineno, t[6], "s_max_kva");
            if (!have_base)
                parse_fail(origin, lt.lineno, "line record before base record");
            l.r_pu = r_ohm / (net.base_kv * net.base_kv / net.base_mva);
            l.x_pu = x_ohm / (net.base_kv * net.base_kv / net.base_mva);
            if (r_ohm < 0 || x_ohm < 0 || (r_ohm == 0 && x_ohm == 0))
                throw ValidationError(origin + ":" + std::to_string(lt.lineno) + ": line " +
                                      std::to_string(l.from) + "-" + std::to_string(l.to) +
                                      " needs r >= 0, x >= 0, not both zero");
            if (l.i2_max_pu <= 0 || l.s_max_kva <= 0)
                throw ValidationError(origin + ":" + std::to_string(lt.lineno) + ": line " +
                                      std::to_string(l.from) + "-" + std::to_string(l.to) +
                                      " limits must be positive");
            net.lines.push_back(l);
        } else if (t[0] == "gen") {
            need(origin, lt, 7);
            Generator g;
            g.node = to_int(origin, lt.lineno, t[1], "gen node");
            g.kind = parse_kind(origin, lt.lineno, t[2]);
            g.p_max_kw = to_num(origin, lt.lineno, t[3], "p_max_kw");
            g.q_min_kvar = to_num(origin, lt.lineno, t[4], "q_min_kvar");
            g.q_max_kvar = to_num(origin, lt.lineno, t[5], "q_max_kvar");
            g.cost_usd_mwh = to_num(origin, lt.lineno, t[6], "cost_usd_mwh");
            if (g.p_max_kw < 0 || g.cost_usd_mwh < 0)
                throw ValidationError(origin + ":" + std::to_string(lt.lineno) +
                                      ": generator at node " + std::to_string(g.node) +
                                      " needs p_max >= 0 and cost >= 0");
            if (g.q_min_kvar > g.q_max_kvar)
                throw ValidationError(origin + ":" + std::to_string(lt.lineno) +
                                      ": generator at node " + std::to_string(g.node) +
                                      " has q_min > q_max");
            gen_lineno[g.node] = lt.lineno;
            bool found = false;
            for (auto& n : net.nodes) {
                if (n.id == g.node) {
                    if (n.generator)
                        throw ValidationError(origin + ":" + std::to_string(lt.lineno) +
                                              ": node " + std::to_string(g.node) +
                                              " already has a generator");
                    n.generator = g;
                    found = true;
                    break;
                }
            }
            if (!found)
                throw ValidationError(origin + ":" + std::to_string(lt.lineno) +
                                      ": generator references unknown node " +
                                      std::to_string(g.node));
        } else {
            parse_fail(origin, lt.lineno, "unknown record '" + t[0] + "'");
        }
    }

    if (!have_base) throw ParseError(origin + ": missing base record");
    if (!have_root) throw ParseError(origin + ": missing root record");
    if (net.nodes.empty()) throw ParseError(origin + ": no node records");

    net.finalize();
    return net;
}

Network load_feeder(const std::string& path) {
    return parse_feeder_text(read_file(path), path);
}

std::string serialize_feeder(const Network& net) {
    std::ostringstream out;
    out.precision(17);
    double zb = net.z_base_ohm();
    out << "base " << net.base_kv << " " << net.base_mva << "\n";
    out << "root " << net.root << "\n";
    for (const auto& n : net.nodes)
        out << "node " << n.id << " " << n.load_p_kw << " " << n.load_q_kvar << " "
            << n.v_min_pu << " " << n.v_max_pu << " " << role_name(n.role) << "\n";
    for (const auto& l : net.lines)
        out << "line " << l.from << " " << l.to << " " << l.r_pu * zb << " " << l.x_pu * zb
            << " " << l.i2_max_pu << " " << l.s_max_kva << "\n";
    for (const auto& n : net.nodes)
        if (n.generator) {
            const auto& g = *n.generator;
            out << "gen " << g.node << " " << kind_name(g.kind) << " " << g.p_max_kw << " "
                << g.q_min_kvar << " " << g.q_max_kvar << " " << g.cost_usd_mwh << "\n";
        }
    return out.str();
}

Profiles parse_profiles_text(const std::string& text, const std::string& origin) {
    Profiles p;
    std::vector<double> default_mult;
    std::map<int, std::vector<double>> node_mult;
    bool have_horizon = false;

    auto expand = [&](const LineTokens& lt, std::size_t first_value) {
        std::vector<double> vals;
        const std::string& res = lt.tok[first_value - 1];
        for (std::size_t i = first_value; i < lt.tok.size(); ++i)
            vals.push_back(to_num(origin, lt.lineno, lt.tok[i], "series value"));
        if (res == "hourly") {
            if (!have_horizon) parse_fail(origin, lt.lineno, "series before horizon record");
            int per_hour = 60 / p.dt_minutes;
            if (static_cast<int>(vals.size()) * per_hour != p.horizon)
                parse_fail(origin, lt.lineno,
                           "hourly series length * " + std::to_string(per_hour) +
                               " != horizon " + std::to_string(p.horizon));
            std::vector<double> out;
            for (double v : vals)
                for (int k = 0; k < per_hour; ++k) out.push_back(v); // step interpolation
            return out;
        }
        if (res == "interval") {
            if (static_cast<int>(vals.size()) != p.horizon)
                parse_fail(origin, lt.lineno, "interval series length != horizon");
            return vals;
        }
        parse_fail(origin, lt.lineno, "unknown resolution '" + res + "' (hourly|interval)");
    };

    for (const auto& lt : tokenize(text)) {
        const auto& t = lt.tok;
        if (t[0] == "dt_minutes") {
            need(origin, lt, 2);
            p.dt_minutes = to_int(origin, lt.lineno, t[1], "dt_minutes");
            if (p.dt_minutes <= 0 || 60 % p.dt_minutes != 0)
                parse_fail(origin, lt.lineno, "dt_minutes must divide 60");
        } else if (t[0] == "horizon") {
            need(origin, lt, 2);
            p.horizon = to_int(origin, lt.lineno, t[1], "horizon");
            if (p.horizon <= 0) parse_fail(origin, lt.lineno, "horizon must be positive");
            have_horizon = true;
        } else if (t[0] == "fit") {
            need(origin, lt, 2);
            p.fit_usd_mwh = to_num(origin, lt.lineno, t[1], "fit");
        } else if (t[0] == "voll") {
            need(origin, lt, 2);
            p.voll_usd_mwh = to_num(origin, lt.lineno, t[1], "voll");
        } else if (t[0] == "loadmult") {
            if (lt.tok.size() < 4) parse_fail(origin, lt.lineno, "loadmult needs target, resolution, values");
            if (t[1] == "all")
                default_mult = expand(lt, 3);
            else
                node_mult[to_int(origin, lt.lineno, t[1], "node id")] = expand(lt, 3);
        } else if (t[0] == "pv") {
            if (lt.tok.size() < 4) parse_fail(origin, lt.lineno, "pv needs node, resolution, values");
            int node = to_int(origin, lt.lineno, t[1], "pv node id");
            auto series = expand(lt, 3);
            for (double v : series)
                if (v < 0.0 || v > 1.0)
                    throw ValidationError(origin + ":" + std::to_string(lt.lineno) +
                                          ": PV fraction outside [0,1]");
            p.pv_fraction[node] = std::move(series);
        } else if (t[0] == "lmp") {
            if (lt.tok.size() < 3) parse_fail(origin, lt.lineno, "lmp needs resolution, values");
            p.lmp_usd_mwh = expand(lt, 2);
        } else {
            parse_fail(origin, lt.lineno, "unknown record '" + t[0] + "'");
        }
    }

    if (!have_horizon) throw ParseError(origin + ": missing horizon record");
    if (default_mult.empty() && node_mult.empty())
        throw ParseError(origin + ": missing loadmult series");
    if (p.lmp_usd_mwh.empty()) throw ParseError(origin + ": missing lmp series");
    if (default_mult.empty()) default_mult.assign(p.horizon, 1.0);

    p.default_load_mult = std::move(default_mult);
    p.load_mult_overrides = std::move(node_mult);
    return p;
}

Profiles load_profiles(const std::string& path) {
    return parse_profiles_text(read_file(path), path);
}

void validate_profiles(const Network& net, const Profiles& prof) {
    double max_cost = 0.0;
    for (const auto& n : net.nodes)
        if (n.generator) max_cost = std::max(max_cost, n.generator->cost_usd_mwh);
    for (double v : prof.lmp_usd_mwh) max_cost = std::max(max_cost, v);
    if (!(prof.voll_usd_mwh > max_cost))
        throw ValidationError("VOLL " + std::to_string(prof.voll_usd_mwh) +
                              " must exceed every generation cost and LMP (max " +
                              std::to_string(max_cost) + ")");
    for (const auto& [node, series] : prof.pv_fraction) {
        const Node& n = net.node_by_id(node); // throws on unknown node
        if (!n.generator || n.generator->kind != GenKind::pv_prosumer)
            throw ValidationError("pv profile for node " + std::to_string(node) +
                                  " which has no pv generator");
        if (static_cast<int>(series.size()) != prof.horizon)
            throw ValidationError("pv series length mismatch at node " + std::to_string(node));
    }
    for (const auto& [node, series] : prof.load_mult_overrides) {
        net.index_of(node);
        if (static_cast<int>(series.size()) != prof.horizon)
            throw ValidationError("loadmult series length mismatch at node " + std::to_string(node));
    }
    if (static_cast<int>(prof.lmp_usd_mwh.size()) != prof.horizon)
        throw ValidationError("lmp series length mismatch");
    if (static_cast<int>(prof.default_load_mult.size()) != prof.horizon)
        throw ValidationError("default loadmult series length mismatch");
}

Scenario load_scenario(const std::string& scenario_path) {
    namespace fs = std::filesystem;
    std::string text = read_file(scenario_path);
    const std::string& origin = scenario_path;

    ScenarioConfig cfg;
    cfg.scenario_path = scenario_path;
    std::optional<double> fit_override, voll_override;
    std::map<int, int> zones;

    for (const auto& lt : tokenize(text)) {
        const auto& t = lt.tok;
        if (t[0] == "feeder") {
            need(origin, lt, 2);
            cfg.feeder_path = t[1];
        } else if (t[0] == "profiles") {
            need(origin, lt, 2);
            cfg.profiles_path = t[1];
        } else if (t[0] == "seed") {
            need(origin, lt, 2);
            cfg.seed = static_cast<std::uint64_t>(
                std::stoull(t[1]));
        } else if (t[0] == "p2p") {
            need(origin, lt, 2);
            if (t[1] == "on") cfg.p2p_enabled = true;
            else if (t[1] == "off") cfg.p2p_enabled = false;
            else parse_fail(origin, lt.lineno, "p2p expects on|off");
        } else if (t[0] == "outage") {
            if (t.size() == 4 && t[1] == "tie") {
                OutageEvent ev;
                ev.element = "tie";
                ev.start = to_int(origin, lt.lineno, t[2], "outage start");
                ev.duration = to_int(origin, lt.lineno, t[3], "outage duration");
                if (ev.duration < 1) throw ValidationError(origin + ": outage duration must be >= 1");
                cfg.outages.push_back(ev);
            } else if (t.size() == 6 && t[1] == "line") {
                OutageEvent ev;
                ev.element = "line " + t[2] + " " + t[3];
                ev.start = to_int(origin, lt.lineno, t[4], "outage start");
                ev.duration = to_int(origin, lt.lineno, t[5], "outage duration");
                if (ev.duration < 1) throw ValidationError(origin + ": outage duration must be >= 1");
                cfg.outages.push_back(ev);
            } else {
                parse_fail(origin, lt.lineno, "outage expects 'tie <start> <dur>' or 'line <from> <to> <start> <dur>'");
            }
        } else if (t[0] == "tie_capacity_kw") {
            need(origin, lt, 2);
            cfg.tie_capacity_kw = to_num(origin, lt.lineno, t[1], "tie_capacity_kw");
        } else if (t[0] == "vet_margin") {
            need(origin, lt, 2);
            cfg.vet_margin = to_num(origin, lt.lineno, t[1], "vet_margin");
        } else if (t[0] == "fit") {
            need(origin, lt, 2);
            fit_override = to_num(origin, lt.lineno, t[1], "fit");
        } else if (t[0] == "voll") {
            need(origin, lt, 2);
            voll_override = to_num(origin, lt.lineno, t[1], "voll");
        } else if (t[0] == "ask_price_cap") {
            need(origin, lt, 2);
            cfg.bidding.price_cap_usd_mwh = to_num(origin, lt.lineno, t[1], "ask_price_cap");
        } else if (t[0] == "emergency_uplift") {
            need(origin, lt, 2);
            cfg.bidding.emergency_uplift = to_num(origin, lt.lineno, t[1], "emergency_uplift");
        } else if (t[0] == "demand_fraction") {
            need(origin, lt, 2);
            cfg.bidding.demand_fraction = to_num(origin, lt.lineno, t[1], "demand_fraction");
        } else if (t[0] == "zone") {
            need(origin, lt, 3);
            int zid = to_int(origin, lt.lineno, t[2], "zone id");
            auto dash = t[1].find('-');
            if (dash == std::string::npos) {
                zones[to_int(origin, lt.lineno, t[1], "node id")] = zid;
            } else {
                int a = to_int(origin, lt.lineno, t[1].substr(0, dash), "zone range start");
                int b = to_int(origin, lt.lineno, t[1].substr(dash + 1), "zone range end");
                if (a > b) parse_fail(origin, lt.lineno, "zone range start > end");
                for (int id = a; id <= b; ++id) zones[id] = zid;
            }
        } else {
            parse_fail(origin, lt.lineno, "unknown record '" + t[0] + "'");
        }
    }

    if (cfg.feeder_path.empty()) throw ParseError(origin + ": missing feeder record");
    if (cfg.profiles_path.empty()) throw ParseError(origin + ": missing profiles record");

    fs::path base = fs::path(scenario_path).parent_path();
    auto resolve = [&](const std::string& p) {
        fs::path fp(p);
        return fp.is_absolute() ? fp.string() : (base / fp).string();
    };
    cfg.feeder_path = resolve(cfg.feeder_path);
    cfg.profiles_path = resolve(cfg.profiles_path);

    Scenario sc;
    sc.network = load_feeder(cfg.feeder_path);
    sc.profiles = load_profiles(cfg.profiles_path);
    sc.config = cfg;

    if (fit_override) sc.profiles.fit_usd_mwh = *fit_override;
    if (voll_override) sc.profiles.voll_usd_mwh = *voll_override;

    // Zone map: explicit entries from the config, defaults otherwise.
    for (const auto& [node, zid] : zones) {
        sc.network.index_of(node); // existence check
        sc.network.zones[node] = zid;
    }

    for (const auto& ev : sc.config.outages) {
        if (ev.start < 0 || ev.start + ev.duration > sc.profiles.horizon)
            throw ValidationError(origin + ": outage window [" + std::to_string(ev.start) +
                                  ", " + std::to_string(ev.start + ev.duration) +
                                  ") outside horizon");
        if (ev.element != "tie") {
            std::istringstream ss(ev.element);
            std::string kw;
            int a, b;
            ss >> kw >> a >> b;
            bool found = false;
            for (const auto& l : sc.network.lines)
                if (l.from == a && l.to == b) found = true;
            if (!found)
                throw ValidationError(origin + ": outage references unknown line " +
                                      std::to_string(a) + "-" + std::to_string(b));
        }
    }

    validate_profiles(sc.network, sc.profiles);
    return sc;
}

} // namespace p2pgrid
