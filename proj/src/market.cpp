#include "p2pgrid/market.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace p2pgrid {

namespace {

bool ask_before(const Order& a, const Order& b) {
    if (a.price_usd_mwh != b.price_usd_mwh) return a.price_usd_mwh < b.price_usd_mwh;
    return a.agent < b.agent;
}

bool bid_before(const Order& a, const Order& b) {
    if (a.price_usd_mwh != b.price_usd_mwh) return a.price_usd_mwh > b.price_usd_mwh;
    return a.agent < b.agent;
}

void validate_order(const Order& o) {
    if (o.price_usd_mwh < 0) throw ValidationError("order price must be nonnegative");
    if (o.quantity_kw <= 0) throw ValidationError("order quantity must be positive");
}

// splitmix64: deterministic, platform-independent draw sequence
std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

struct Rng {
    std::uint64_t state;
    explicit Rng(std::uint64_t seed) : state(seed) {}
    double uniform() { // in [0, 1)
        state = mix64(state);
        return static_cast<double>(state >> 11) * 0x1.0p-53;
    }
};

} // namespace

std::uint64_t interval_seed(std::uint64_t scenario_seed, int interval) {
    return mix64(scenario_seed ^
                 (0x9e3779b97f4a7c15ull * (static_cast<std::uint64_t>(interval) + 1)));
}

void sort_orders(std::vector<Order>& asks, std::vector<Order>& bids) {
    std::stable_sort(asks.begin(), asks.end(), ask_before);
    std::stable_sort(bids.begin(), bids.end(), bid_before);
}

double average_price(const std::vector<Order>& asks, const std::vector<Order>& bids) {
    if (asks.empty() && bids.empty())
        throw ValidationError("average price of an empty pool is undefined");
    double sum = 0.0;
    for (const auto& o : asks) sum += o.price_usd_mwh;
    for (const auto& o : bids) sum += o.price_usd_mwh;
    return sum / static_cast<double>(asks.size() + bids.size());
}

QualifiedPool qualify(const std::vector<Order>& asks, const std::vector<Order>& bids,
                      double gamma) {
    QualifiedPool q;
    for (const auto& o : asks)
        if (o.price_usd_mwh < gamma) q.asks.push_back(o);
    for (const auto& o : bids)
        if (o.price_usd_mwh > gamma) q.bids.push_back(o);
    return q;
}

std::vector<Match> match_round(std::vector<Order>& asks, std::vector<Order>& bids,
                               MatchRound round) {
    sort_orders(asks, bids);
    std::vector<Match> out;
    std::size_t i = 0, j = 0;
    while (i < asks.size() && j < bids.size()) {
        Order& a = asks[i];
        Order& b = bids[j];
        if (!(a.price_usd_mwh < b.price_usd_mwh)) break; // strict crossing only
        double q = std::min(a.quantity_kw, b.quantity_kw);
        Match m;
        m.seller = a.agent;
        m.buyer = b.agent;
        m.seller_node = a.node;
        m.buyer_node = b.node;
        m.quantity_kw = q;
        m.price_usd_mwh = 0.5 * (a.price_usd_mwh + b.price_usd_mwh);
        m.round = round;
        out.push_back(m);
        a.quantity_kw -= q;
        b.quantity_kw -= q;
        if (a.quantity_kw <= 1e-12) ++i;
        if (b.quantity_kw <= 1e-12) ++j;
    }
    asks.erase(std::remove_if(asks.begin(), asks.end(),
                              [](const Order& o) { return o.quantity_kw <= 1e-12; }),
               asks.end());
    bids.erase(std::remove_if(bids.begin(), bids.end(),
                              [](const Order& o) { return o.quantity_kw <= 1e-12; }),
               bids.end());
    return out;
}

AuctionOutcome run_mrda(const std::vector<Order>& orders, const Network& net,
                        const std::vector<double>& dlmp_signal_usd_mwh, int interval) {
    AuctionOutcome out;
    out.interval = interval;
    out.orders = orders;

    std::map<int, OrderSide> agent_side;
    for (const auto& o : orders) {
        validate_order(o);
        if (o.interval != interval)
            throw ValidationError("order interval mismatch in auction pool");
        auto [it, fresh] = agent_side.emplace(o.agent, o.side);
        if (!fresh)
            throw ValidationError("agent " + std::to_string(o.agent) +
                                  " submitted more than one order this interval");
        if (o.side == OrderSide::bid) {
            double cap = dlmp_signal_usd_mwh[net.index_of(o.node)];
            if (o.price_usd_mwh > cap + 1e-9)
                throw ValidationError("bid above the nodal price cap at node " +
                                      std::to_string(o.node));
        }
    }

    // residual books, mutated round by round
    std::vector<Order> asks, bids;
    for (const auto& o : orders) (o.side == OrderSide::ask ? asks : bids).push_back(o);

    auto run_pool = [&](std::vector<Order>& pool_asks, std::vector<Order>& pool_bids,
                        MatchRound round, const std::string& gamma_key) {
        if (pool_asks.empty() && pool_bids.empty()) return std::vector<Match>{};
        double gamma = average_price(pool_asks, pool_bids);
        out.round_gammas[gamma_key] = gamma;
        QualifiedPool q = qualify(pool_asks, pool_bids, gamma);
        auto matches = match_round(q.asks, q.bids, round);
        // write back residual quantities of the qualified orders
        auto write_back = [](std::vector<Order>& pool, const std::vector<Order>& leftover,
                             double gamma_, bool is_ask) {
            std::vector<Order> next;
            for (const auto& o : pool) {
                bool qualified = is_ask ? (o.price_usd_mwh < gamma_) : (o.price_usd_mwh > gamma_);
                if (!qualified) {
                    next.push_back(o); // non-winners carry their full quantity
                    continue;
                }
                for (const auto& l : leftover)
                    if (l.agent == o.agent && l.node == o.node && l.quantity_kw > 1e-12) {
                        Order rest = o;
                        rest.quantity_kw = l.quantity_kw;
                        next.push_back(rest);
                    }
            }
            pool = next;
        };
        write_back(pool_asks, q.asks, gamma, true);
        write_back(pool_bids, q.bids, gamma, false);
        return matches;
    };

    // round 1: per node
    {
        std::map<int, std::vector<Order>> a_by, b_by;
        for (auto& o : asks) a_by[o.node].push_back(o);
        for (auto& o : bids) b_by[o.node].push_back(o);
        asks.clear();
        bids.clear();
        std::vector<int> nodes;
        for (auto& [n, _] : a_by) nodes.push_back(n);
        for (auto& [n, _] : b_by)
            if (!a_by.count(n)) nodes.push_back(n);
        std::sort(nodes.begin(), nodes.end());
        for (int n : nodes) {
            auto& pa = a_by[n];
            auto& pb = b_by[n];
            auto m = run_pool(pa, pb, MatchRound::nodal, "nodal:" + std::to_string(n));
            out.matches.insert(out.matches.end(), m.begin(), m.end());
            asks.insert(asks.end(), pa.begin(), pa.end());
            bids.insert(bids.end(), pb.begin(), pb.end());
        }
    }
    // round 2: per zone
    {
        std::map<int, std::vector<Order>> a_by, b_by;
        for (auto& o : asks) a_by[o.zone].push_back(o);
        for (auto& o : bids) b_by[o.zone].push_back(o);
        asks.clear();
        bids.clear();
        std::vector<int> zones;
        for (auto& [z, _] : a_by) zones.push_back(z);
        for (auto& [z, _] : b_by)
            if (!a_by.count(z)) zones.push_back(z);
        std::sort(zones.begin(), zones.end());
        for (int z : zones) {
            auto& pa = a_by[z];
            auto& pb = b_by[z];
            auto m = run_pool(pa, pb, MatchRound::zonal, "zonal:" + std::to_string(z));
            out.matches.insert(out.matches.end(), m.begin(), m.end());
            asks.insert(asks.end(), pa.begin(), pa.end());
            bids.insert(bids.end(), pb.begin(), pb.end());
        }
    }
    // round 3: network-wide
    {
        auto m = run_pool(asks, bids, MatchRound::network, "network");
        out.matches.insert(out.matches.end(), m.begin(), m.end());
    }

    for (const auto& o : orders) out.residual_kw.try_emplace(o.agent, 0.0);
    for (const auto& o : asks) out.residual_kw[o.agent] += o.quantity_kw;
    for (const auto& o : bids) out.residual_kw[o.agent] += o.quantity_kw;
    return out;
}

void settle(AuctionOutcome& outcome, double fit_usd_mwh,
            const std::vector<double>& dlmp_usd_mwh, const Network& net, double dt_hours,
            const std::map<int, double>& fit_quantity_cap_kw) {
    outcome.settlements.clear();
    double matched = 0.0, price_x_qty = 0.0;
    for (const auto& m : outcome.matches) {
        if (m.vetting == VetStatus::blocked) continue;
        matched += m.quantity_kw;
        price_x_qty += m.quantity_kw * m.price_usd_mwh;
    }
    outcome.matched_kw = matched;
    outcome.atp_usd_mwh =
        matched > 0 ? price_x_qty / matched : std::numeric_limits<double>::quiet_NaN();

    for (const auto& o : outcome.orders) {
        auto it = outcome.residual_kw.find(o.agent);
        double resid = it == outcome.residual_kw.end() ? 0.0 : it->second;
        if (resid <= 1e-12) continue;
        GridSettlement g;
        g.agent = o.agent;
        g.node = o.node;
        g.side = o.side;
        if (o.side == OrderSide::ask) {
            double eligible = resid;
            auto cap = fit_quantity_cap_kw.find(o.agent);
            if (cap != fit_quantity_cap_kw.end()) eligible = std::min(eligible, cap->second);
            if (eligible <= 1e-12) continue;
            g.quantity_kw = eligible;
            g.price_usd_mwh = fit_usd_mwh;
            g.cash_usd = eligible * dt_hours * fit_usd_mwh / 1000.0;
        } else {
            double price = dlmp_usd_mwh.empty()
                               ? std::numeric_limits<double>::quiet_NaN()
                               : dlmp_usd_mwh[net.index_of(o.node)];
            if (!std::isfinite(price))
                throw ValidationError("missing nodal price for residual demand at node " +
                                      std::to_string(o.node));
            g.quantity_kw = resid;
            g.price_usd_mwh = price;
            g.cash_usd = -resid * dt_hours * price / 1000.0;
        }
        outcome.settlements.push_back(g);
    }
    outcome.settled = true;
}

void payoffs(AuctionOutcome& outcome) {
    outcome.seller_welfare.clear();
    outcome.buyer_welfare.clear();
    std::map<int, double> ask_price, bid_price;
    for (const auto& o : outcome.orders) {
        (o.side == OrderSide::ask ? ask_price : bid_price)[o.agent] = o.price_usd_mwh;
        (o.side == OrderSide::ask ? outcome.seller_welfare : outcome.buyer_welfare)
            .try_emplace(o.agent, 0.0);
    }
    double tw = 0.0;
    for (const auto& m : outcome.matches) {
        if (m.vetting == VetStatus::blocked) continue;
        double sw = (m.price_usd_mwh - ask_price[m.seller]) * m.quantity_kw;
        double bw = (bid_price[m.buyer] - m.price_usd_mwh) * m.quantity_kw;
        outcome.seller_welfare[m.seller] += sw;
        outcome.buyer_welfare[m.buyer] += bw;
        tw += sw + bw;
    }
    outcome.total_welfare = tw;
}

std::vector<Order> default_strategy_orders(const BidContext& ctx,
                                           const std::vector<AgentSituation>& agents) {
    std::vector<AgentSituation> sorted = agents;
    std::sort(sorted.begin(), sorted.end(),
              [](const AgentSituation& a, const AgentSituation& b) { return a.node < b.node; });
    Rng rng(ctx.seed);
    std::vector<Order> out;
    for (const auto& ag : sorted) {
        double ref = std::min(ag.ref_price_usd_mwh, ctx.params.price_cap_usd_mwh);
        double floor = ctx.fit_usd_mwh;
        if (ctx.islanded)
            floor = ctx.fit_usd_mwh + ctx.params.emergency_uplift * (ref - ctx.fit_usd_mwh);
        if (ag.surplus_kw > 1e-9) {
            double u = rng.uniform();
            Order o;
            o.agent = ag.agent;
            o.side = OrderSide::ask;
            o.node = ag.node;
            o.zone = ag.zone;
            o.quantity_kw = ag.surplus_kw;
            o.price_usd_mwh = ref <= floor ? ref : floor + u * (ref - floor);
            o.interval = ctx.interval;
            out.push_back(o);
        }
        if (ag.demand_kw > 1e-9) {
            double u = rng.uniform();
            Order o;
            o.agent = ag.agent;
            o.side = OrderSide::bid;
            o.node = ag.node;
            o.zone = ag.zone;
            o.quantity_kw = ag.demand_kw;
            o.price_usd_mwh = ref <= floor ? ref : floor + u * (ref - floor);
            o.interval = ctx.interval;
            out.push_back(o);
        }
    }
    return out;
}

} // namespace p2pgrid
